import random
from urllib.parse import parse_qs, urlsplit

import pytest

from generators import gen_patient
from pnav.fhir import Patient, make_searchset, validate
from pnav.fhir.searchset import PageOutOfRange

BASE = "http://sandbox.local/fhir"


def _patients(n):
    return [Patient(id=str(i + 1)) for i in range(n)]


def test_empty_match_set():
    bundle = make_searchset([], BASE, page_size=10, page_index=0)
    assert bundle.type == "searchset"
    assert bundle.total == 0
    assert bundle.entry == []
    assert bundle.link_url("self") is not None
    assert bundle.link_url("next") is None


def test_five_matches_page_size_two():
    matches = _patients(5)
    middle = make_searchset(matches, BASE, 2, 1)
    assert middle.total == 5
    assert len(middle.entry) == 2
    assert middle.link_url("next") is not None
    last = make_searchset(matches, BASE, 2, 2)
    assert last.total == 5
    assert len(last.entry) == 1
    assert last.link_url("next") is None


def test_pages_agree_with_brute_force_slices():
    # oracle: plain list slicing, computed independently of the builder
    rng = random.Random(2)
    for total in range(0, 26):
        matches = [gen_patient(rng, with_id=True) for _ in range(total)]
        for size in range(1, 8):
            collected = []
            page = 0
            while True:
                bundle = make_searchset(matches, BASE, size, page)
                assert bundle.total == total
                collected.extend(e.resource for e in bundle.entry)
                expected_slice = matches[page * size : (page + 1) * size]
                assert [e.resource for e in bundle.entry] == expected_slice
                has_next = bundle.link_url("next") is not None
                assert has_next == ((page + 1) * size < total)
                if not has_next:
                    break
                page += 1
            assert collected == matches


def test_every_entry_is_a_match_with_a_full_url():
    matches = _patients(3)
    bundle = make_searchset(matches, BASE, 10, 0)
    for i, entry in enumerate(bundle.entry):
        assert entry.search.mode == "match"
        assert entry.full_url == f"{BASE}/Patient/{i + 1}"
    assert validate(bundle) == []


def test_links_preserve_the_original_query():
    matches = _patients(7)
    bundle = make_searchset(
        matches, BASE, 3, 0, search_url=BASE + "/Patient?name=silva&_page=0&_count=3"
    )
    next_url = bundle.link_url("next")
    query = parse_qs(urlsplit(next_url).query)
    assert query["name"] == ["silva"]
    assert query["_page"] == ["1"]
    assert query["_count"] == ["3"]


def test_final_empty_page_is_allowed_but_beyond_it_is_not():
    matches = _patients(4)
    boundary = make_searchset(matches, BASE, 2, 2)  # offset 4 == total
    assert boundary.entry == []
    assert boundary.link_url("next") is None
    with pytest.raises(PageOutOfRange):
        make_searchset(matches, BASE, 2, 3)


def test_page_size_must_be_positive():
    with pytest.raises(ValueError):
        make_searchset([], BASE, 0, 0)
