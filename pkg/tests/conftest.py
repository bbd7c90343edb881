from __future__ import annotations

import pytest

from flashsim.commands import CommandKind
from flashsim.models import ModelSet
from flashsim.topology import FlashAddress, Geometry

ALL_KINDS = frozenset(CommandKind)


def A(channel=0, chip=0, die=0, plane=0, block=0, page=0) -> FlashAddress:
    return FlashAddress(channel, chip, die, plane, block, page)


@pytest.fixture
def geometry() -> Geometry:
    # the small reference geometry used throughout: 512 pages
    return Geometry(2, 2, 2, 2, 4, 8, 4096, 128)


@pytest.fixture
def models() -> ModelSet:
    return ModelSet()


@pytest.fixture
def supported() -> frozenset[CommandKind]:
    return ALL_KINDS
