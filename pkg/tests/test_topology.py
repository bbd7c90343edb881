from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flashsim.errors import AddressRangeError, GeometryError, Rule, Severity
from flashsim.topology import (
    FlashAddress,
    Geometry,
    PageState,
    SubsystemState,
    decode,
    encode,
    validate_geometry,
)

from conftest import A
from oracle import enumerated_addresses, enumerated_index_map


def test_minimal_geometry_is_legal():
    validate_geometry(Geometry(1, 1, 1, 1, 1, 1, 4096, 128))


def test_reference_geometry_total_pages(geometry):
    validate_geometry(geometry)
    # product of the six counts, cross-checked against the enumeration oracle
    assert geometry.total_pages == 2 * 2 * 2 * 2 * 4 * 8 == 512
    assert geometry.total_pages == len(enumerated_addresses(geometry))


@pytest.mark.parametrize("zeroed", range(6))
def test_zero_dimension_rejected(zeroed):
    counts = [2, 2, 2, 2, 4, 8]
    counts[zeroed] = 0
    with pytest.raises(GeometryError):
        validate_geometry(Geometry(*counts, 4096, 128))


def test_bad_page_and_oob_sizes_rejected():
    with pytest.raises(GeometryError):
        validate_geometry(Geometry(1, 1, 1, 1, 1, 1, 0, 0))
    with pytest.raises(GeometryError):
        validate_geometry(Geometry(1, 1, 1, 1, 1, 1, 4096, -1))


def test_index_domain_overflow_rejected():
    huge = 2**22
    with pytest.raises(GeometryError):
        validate_geometry(Geometry(huge, huge, huge, 1, 1, 1, 4096, 0))


def test_encode_origin_and_all_max(geometry):
    assert encode(A(), geometry) == 0
    top = A(1, 1, 1, 1, 3, 7)
    assert encode(top, geometry) == geometry.total_pages - 1
    assert decode(0, geometry) == A()
    assert decode(geometry.total_pages - 1, geometry) == top


def test_encode_matches_enumeration_oracle(geometry):
    # frozen from the oracle: channel-major mixed radix puts 1.0.1.0.2.5 at 341
    addr = A(1, 0, 1, 0, 2, 5)
    oracle = enumerated_index_map(geometry)
    assert oracle[addr] == 341
    assert encode(addr, geometry) == 341
    for address, index in oracle.items():
        assert encode(address, geometry) == index


def test_decode_matches_enumeration_oracle(geometry):
    addresses = enumerated_addresses(geometry)
    for index in range(geometry.total_pages):
        assert decode(index, geometry) == addresses[index]


def test_codec_out_of_range(geometry):
    with pytest.raises(AddressRangeError):
        encode(A(channel=2), geometry)
    with pytest.raises(AddressRangeError):
        encode(A(block=4), geometry)
    with pytest.raises(AddressRangeError):
        decode(-1, geometry)
    with pytest.raises(AddressRangeError):
        decode(geometry.total_pages, geometry)


small_geometries = st.builds(
    Geometry,
    st.integers(1, 3),
    st.integers(1, 3),
    st.integers(1, 3),
    st.integers(1, 3),
    st.integers(1, 4),
    st.integers(1, 8),
    st.just(512),
    st.just(16),
)


@settings(max_examples=60, deadline=None)
@given(small_geometries)
def test_codec_bijection_exhaustive(g):
    # total_pages <= 4096 for every drawn geometry
    addresses = enumerated_addresses(g)
    for index, addr in enumerate(addresses):
        assert encode(addr, g) == index
        assert decode(index, g) == addr


def test_initial_state_all_erased_zero_wear(geometry):
    state = SubsystemState(geometry)
    for addr in enumerated_addresses(geometry):
        assert state.page_state(addr) is PageState.ERASED
        assert state.erase_count(addr) == 0


def test_write_then_erase_cycle(geometry):
    state = SubsystemState(geometry)
    page = A(block=1, page=3)
    assert state.write_page(page) == []
    assert state.page_state(page) is PageState.WRITTEN

    again = state.write_page(page)
    assert [w.rule for w in again] == [Rule.ERASE_BEFORE_WRITE]
    assert all(w.severity is Severity.WARNING for w in again)

    assert state.erase_block(A(block=1)) == []
    assert state.page_state(page) is PageState.ERASED
    assert state.write_page(page) == []


def test_erase_is_atomic_over_the_block(geometry):
    state = SubsystemState(geometry)
    for page in range(geometry.pages_per_block):
        state.write_page(A(block=2, page=page))
    state.erase_block(A(block=2, page=5))
    for page in range(geometry.pages_per_block):
        assert state.page_state(A(block=2, page=page)) is PageState.ERASED
    # the neighbouring block is untouched
    state.write_page(A(block=3, page=0))
    state.erase_block(A(block=2))
    assert state.page_state(A(block=3, page=0)) is PageState.WRITTEN


def test_endurance_warning_after_limit(geometry):
    state = SubsystemState(geometry, endurance_limit=3)
    block = A(block=0)
    for _ in range(3):
        assert state.erase_block(block) == []
    fourth = state.erase_block(block)
    assert [w.rule for w in fourth] == [Rule.ENDURANCE_EXCEEDED]
    assert state.erase_count(block) == 4


def test_initially_written_preload(geometry):
    state = SubsystemState(geometry, initially_written=True)
    page = A(block=0, page=0)
    assert state.page_state(page) is PageState.WRITTEN
    warned = state.write_page(page)
    assert [w.rule for w in warned] == [Rule.ERASE_BEFORE_WRITE]
    state.erase_block(page)
    assert state.page_state(page) is PageState.ERASED


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(st.booleans(), st.integers(0, 3), st.integers(0, 7)),
        max_size=60,
    )
)
def test_wear_monotone_and_counts_erases(ops):
    g = Geometry(1, 1, 1, 1, 4, 8, 512, 0)
    state = SubsystemState(g)
    erases_per_block = [0, 0, 0, 0]
    last_counts = [0, 0, 0, 0]
    for is_erase, block, page in ops:
        addr = FlashAddress(0, 0, 0, 0, block, page)
        if is_erase:
            state.erase_block(addr)
            erases_per_block[block] += 1
        else:
            state.write_page(addr)
        for b in range(4):
            count = state.erase_count(FlashAddress(0, 0, 0, 0, b, 0))
            assert count >= last_counts[b]
            last_counts[b] = count
    for b in range(4):
        assert state.erase_count(FlashAddress(0, 0, 0, 0, b, 0)) == erases_per_block[b]
