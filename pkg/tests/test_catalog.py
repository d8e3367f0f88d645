from decimal import Decimal

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from subcorpus.catalog import (
    EmptyCatalogError,
    FilterSpec,
    MovieRecord,
    apply_filter,
    filter_report,
    load_catalog,
)

HEADER = "id,title,year,type,imdbRating,ratingCount,duration,nrOfWins,Action,Drama\n"


def write(tmp_path, text, name="cat.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_header_only(tmp_path):
    records, skipped = load_catalog(write(tmp_path, HEADER))
    assert records == [] and skipped == 0


def test_row_missing_title_is_skipped(tmp_path):
    path = write(tmp_path, HEADER + "a,Alpha,1999,video.movie,7.1,100,5400,3,1,0\n"
                                    "b,,2001,video.movie,6.0,10,6000,0,0,1\n"
                                    "c,Gamma,,video.tv,,,,0,0,0\n")
    records, skipped = load_catalog(path)
    assert [r.id for r in records] == ["a", "c"] and skipped == 1
    alpha, gamma = records
    assert alpha.rating == Decimal("7.1") and alpha.duration == 5400 and alpha.year == 1999
    assert alpha.genres == frozenset({"Action"})
    assert gamma.year is None and gamma.rating is None and gamma.duration is None


def test_unknown_is_not_zero(tmp_path):
    records, _ = load_catalog(write(tmp_path, HEADER + "a,A,,,,,,0,0,0\n"))
    assert records[0].rating is None and records[0].rating_count is None


def test_duplicate_ids_skipped(tmp_path):
    records, skipped = load_catalog(write(tmp_path, HEADER + "a,A,,,,,,0,0,0\na,B,,,,,,0,0,0\n"))
    assert len(records) == 1 and skipped == 1


def test_all_rows_bad(tmp_path):
    with pytest.raises(EmptyCatalogError):
        load_catalog(write(tmp_path, HEADER + ",x,,,,,,,,\n"))


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_catalog(tmp_path / "nope.csv")


def test_column_mapping_and_duration_unit(tmp_path):
    path = write(tmp_path, "tid,name,mins,Comedy\nx1,Film,95,1\n")
    records, _ = load_catalog(path, columns={"id": "tid", "title": "name", "duration": "mins"},
                              duration_unit="minutes")
    assert records[0].duration == 95 * 60 and records[0].genres == {"Comedy"}


def rec(i, **kw):
    return MovieRecord(id=str(i), title=f"t{i}", **kw)


def test_empty_spec_is_identity():
    rs = [rec(1), rec(2, year=2000)]
    assert apply_filter(rs, FilterSpec()) == rs


def test_rating_bound_inclusive_and_unknown_excluded():
    rs = [rec(1, rating=Decimal("5.9")), rec(2, rating=Decimal("6.0")), rec(3)]
    assert [r.id for r in apply_filter(rs, FilterSpec(rating_min=6))] == ["2"]


def test_filter_report_empty_spec():
    assert filter_report([rec(1), rec(2)], FilterSpec()) == [("all", 2)]


def test_filter_report_two_bounds():
    rs = [
        rec(1, media_type="video.movie", year=1990),
        rec(2, media_type="video.movie", year=1950),
        rec(3, media_type="video.tv", year=2000),
        rec(4, media_type="video.movie"),
        rec(5, media_type="video.movie", year=1960),
    ]
    report = filter_report(rs, FilterSpec(type_limit="video.movie", year_min=1960))
    assert report == [("all", 5), ("type = video.movie", 4), ("year >= 1960", 2)]


def test_genre_filter():
    rs = [rec(1, genres=frozenset({"Drama"})), rec(2, genres=frozenset({"Action"})), rec(3)]
    assert [r.id for r in apply_filter(rs, FilterSpec(genre_any={"Action", "War"}))] == ["2"]


records_st = st.lists(
    st.builds(
        MovieRecord,
        id=st.uuids().map(str),
        title=st.just("t"),
        year=st.none() | st.integers(1900, 2020),
        media_type=st.none() | st.sampled_from(["video.movie", "video.tv"]),
        rating=st.none() | st.decimals(0, 10, places=1),
        duration=st.none() | st.integers(0, 10_000),
        genres=st.frozensets(st.sampled_from(["Action", "Drama", "War"])),
    ),
    max_size=30,
)
specs = st.builds(
    FilterSpec,
    type_limit=st.none() | st.sampled_from(["video.movie", "video.tv"]),
    year_min=st.none() | st.integers(1900, 2020),
    rating_min=st.none() | st.decimals(0, 10, places=1),
    duration_min=st.none() | st.integers(0, 10_000),
    genre_any=st.none() | st.frozensets(st.sampled_from(["Action", "Drama", "War"]), min_size=1),
)


@given(records_st, specs)
def test_filter_idempotent_subsequence_monotone(records, spec):
    out = apply_filter(records, spec)
    assert apply_filter(out, spec) == out
    it = iter(records)
    assert all(any(r is x for x in it) for r in out)
    counts = [n for _, n in filter_report(records, spec)]
    assert counts == sorted(counts, reverse=True)
    assert counts[-1] == len(out)


@given(records_st, specs, specs)
def test_conjunction(records, a, b):
    try:
        both = a & b
    except ValueError:
        assume(False)
    assert apply_filter(records, both) == apply_filter(apply_filter(records, a), b)


def test_record_dict_round_trip():
    r = rec(1, year=1999, rating=Decimal("6.5"), genres=frozenset({"War"}))
    assert MovieRecord.from_dict(r.to_dict()) == r
