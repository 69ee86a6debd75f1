import pytest

from lineopt.catalog import (
    CatalogError,
    ShiftSchedule,
    default_catalog,
    dump_catalog,
    dumps_catalog,
    load_catalog,
    loads_catalog,
    scheduled_hours,
)

from conftest import block_week, unchecked_shift


def test_default_catalog_shape(catalog):
    assert len(catalog.shifts) == 15
    assert len(catalog.rates) == 5
    assert catalog.idle_weight == 1000.0
    assert catalog.buffer_capacities == (500, 700)
    assert catalog.monthly_targets == (30000.0,) * 12
    assert catalog.annual_target == 360000.0
    assert catalog.rate(catalog.nominal_rate_id).cars_per_hour == 50.0


def test_default_shifts_distinct_hours(catalog):
    hours = [s.weekly_hours for s in catalog.shifts]
    assert len(set(hours)) == 15
    assert hours == sorted(hours)
    assert all(s.daily_hours(6) == 0.0 for s in catalog.shifts)  # Sundays off


def test_rates_strictly_increasing(catalog):
    values = [r.cars_per_hour for r in catalog.rates]
    assert values == sorted(values)
    assert len(set(values)) == 5


def test_shift_validation():
    with pytest.raises(CatalogError):
        ShiftSchedule(1, (True,) * 100)
    with pytest.raises(CatalogError):
        ShiftSchedule(1, (False,) * 336)


def test_scheduled_hours_all_true(catalog):
    shift = ShiftSchedule(1, (True,) * 336)
    # April has 30 days
    assert scheduled_hours(shift, 4, catalog) == 30 * 24.0


def test_scheduled_hours_empty_schedule(catalog):
    shift = unchecked_shift(1, (False,) * 336)
    assert scheduled_hours(shift, 1, catalog) == 0.0


def test_scheduled_hours_aligned_month(aligned_catalog):
    # 5 days x 16 h/day on a 28-day month aligned to Monday: 4 weeks x 80 h
    shift = ShiftSchedule(1, block_week(5, 6.0, 16.0))
    assert scheduled_hours(shift, 1, aligned_catalog) == 320.0


def test_scheduled_hours_tiling_property(aligned_catalog):
    # aligned calendar = 48 whole weeks, so the year is exactly 48x weekly hours
    for shift in aligned_catalog.shifts:
        annual = sum(scheduled_hours(shift, m, aligned_catalog) for m in range(1, 13))
        assert annual == 48 * shift.weekly_hours


def test_scheduled_hours_2023_tiling(catalog):
    # 2023: 52 whole weeks plus one extra Sunday; default shifts skip Sundays
    for shift in catalog.shifts:
        annual = sum(scheduled_hours(shift, m, catalog) for m in range(1, 13))
        assert annual == 52 * shift.weekly_hours


def test_dump_load_round_trip(catalog, aligned_catalog, tmp_path):
    for cat in (catalog, aligned_catalog):
        assert loads_catalog(dumps_catalog(cat)) == cat
    path = tmp_path / "cat.txt"
    dump_catalog(catalog, path)
    assert load_catalog(path) == catalog


def test_compact_shorthand_matches_explicit():
    text_full = dumps_catalog(default_catalog())
    # shift 2: 5 days x 8h block starting 06:00 (40 weekly hours)
    compact = "2 days=1-5 blocks=06:00-14:00"
    lines = text_full.splitlines()
    idx = next(i for i, l in enumerate(lines) if l.startswith("2 "))
    lines[idx] = compact
    cat = loads_catalog("\n".join(lines))
    assert cat == default_catalog()


def test_load_wrong_shift_count(catalog):
    lines = dumps_catalog(catalog).splitlines()
    lines = [l for l in lines if not l.startswith("15 ")]
    with pytest.raises(CatalogError, match="expected 15 shift schedules"):
        loads_catalog("\n".join(lines))


def test_load_non_increasing_rates(catalog):
    text = dumps_catalog(catalog).replace("2 45.0", "2 40.0")
    with pytest.raises(CatalogError, match="strictly increasing"):
        loads_catalog(text)


@pytest.mark.parametrize(
    "mutation, message",
    [
        ("1 0101", "pattern has"),
        ("1 days=1-9 blocks=06:00-14:00", "day range"),
        ("1 days=1-5 blocks=06:10-14:00", "bad time"),
        ("1 days=1-5", "expected"),
    ],
)
def test_load_bad_shift_rows(catalog, mutation, message):
    lines = dumps_catalog(catalog).splitlines()
    idx = next(i for i, l in enumerate(lines) if l.startswith("1 "))
    lines[idx] = mutation
    with pytest.raises(CatalogError, match=message):
        loads_catalog("\n".join(lines))


def test_load_reports_line_numbers(catalog):
    text = dumps_catalog(catalog) + "\n[shifts]\nnot a shift row\n"
    with pytest.raises(CatalogError, match=r"line \d+"):
        loads_catalog(text)


def test_load_unknown_section(catalog):
    text = dumps_catalog(catalog) + "\n[surprise]\n1 2 3\n"
    with pytest.raises(CatalogError, match="unknown section"):
        loads_catalog(text)


def test_validate_catches_bad_nominal(catalog):
    import dataclasses

    bad = dataclasses.replace(catalog, nominal_rate_id=9)
    with pytest.raises(CatalogError, match="nominal_rate_id"):
        bad.validate()


def test_month_start_days(catalog):
    assert catalog.month_start_day(1) == 0
    assert catalog.month_start_day(2) == 31
    assert catalog.month_start_day(12) == 334
    assert catalog.days_in_year == 365
