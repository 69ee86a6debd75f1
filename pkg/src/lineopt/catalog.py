"""Problem instance definition: shift calendars, production rates, targets,
buffers, and the idle-cost weight.

A catalog pins every scalar constant of the planning problem. The shipped
default is synthetic (15 shift schedules built from shifts-per-day x
days-per-week x block-length combinations, rates 40..60 cars/h) but the file
format makes every field configurable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

SLOTS_PER_DAY = 48  # half-hour resolution
SLOTS_PER_WEEK = 7 * SLOTS_PER_DAY  # 336
N_SHIFTS = 15
N_RATES = 5
N_SHOPS = 6  # 3 stages x 2 parallel shops
N_MONTHS = 12

WEEKDAY_NAMES = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"]

# 2023 reference year: Jan 1 is a Sunday, 365 days.
CALENDAR_2023 = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)
START_WEEKDAY_2023 = 6  # Sunday, Monday-first indexing

# Exact-arithmetic test calendar: 12 x 28 days = 52 whole weeks, Monday start.
CALENDAR_ALIGNED = (28,) * 12


class CatalogError(ValueError):
    """Malformed catalog file or violated catalog invariant."""


@dataclass(frozen=True)
class ShiftSchedule:
    """Weekly working pattern of one shop at half-hour resolution.

    ``weekly_pattern`` has 336 entries (Monday 00:00 first); True means the
    shop is scheduled to work that slot.
    """

    id: int
    weekly_pattern: tuple[bool, ...]

    def __post_init__(self):
        if len(self.weekly_pattern) != SLOTS_PER_WEEK:
            raise CatalogError(
                f"shift {self.id}: weekly_pattern has {len(self.weekly_pattern)} slots, "
                f"expected {SLOTS_PER_WEEK}"
            )
        if not any(self.weekly_pattern):
            raise CatalogError(f"shift {self.id}: schedule has zero working slots")

    @property
    def weekly_hours(self) -> float:
        return 0.5 * sum(self.weekly_pattern)

    def daily_hours(self, weekday: int) -> float:
        """Scheduled hours on one weekday (0 = Monday)."""
        base = weekday * SLOTS_PER_DAY
        return 0.5 * sum(self.weekly_pattern[base : base + SLOTS_PER_DAY])


@dataclass(frozen=True)
class RateOption:
    id: int
    cars_per_hour: float

    def __post_init__(self):
        if self.cars_per_hour <= 0:
            raise CatalogError(f"rate {self.id}: cars_per_hour must be positive")


@dataclass(frozen=True)
class ProblemCatalog:
    """Immutable problem instance shared read-only across trials."""

    shifts: tuple[ShiftSchedule, ...]
    rates: tuple[RateOption, ...]
    nominal_rate_id: int
    monthly_targets: tuple[float, ...]
    buffer_capacities: tuple[int, int]
    idle_weight: float
    calendar: tuple[int, ...]  # month lengths in days
    start_weekday: int = 0  # weekday of day 1 (0 = Monday)

    @property
    def annual_target(self) -> float:
        return float(sum(self.monthly_targets))

    @property
    def days_in_year(self) -> int:
        return sum(self.calendar)

    def shift(self, shift_id: int) -> ShiftSchedule:
        return self.shifts[shift_id - 1]

    def rate(self, rate_id: int) -> RateOption:
        return self.rates[rate_id - 1]

    def month_start_day(self, month: int) -> int:
        """0-based day-of-year on which ``month`` (1..12) starts."""
        return sum(self.calendar[: month - 1])

    def validate(self) -> None:
        """Check every catalog invariant; raise CatalogError naming the rule."""
        if len(self.shifts) != N_SHIFTS:
            raise CatalogError(f"expected {N_SHIFTS} shift schedules, got {len(self.shifts)}")
        if [s.id for s in self.shifts] != list(range(1, N_SHIFTS + 1)):
            raise CatalogError("shift ids must be 1..15 in order")
        if len(self.rates) != N_RATES:
            raise CatalogError(f"expected {N_RATES} rate options, got {len(self.rates)}")
        if [r.id for r in self.rates] != list(range(1, N_RATES + 1)):
            raise CatalogError("rate ids must be 1..5 in order")
        for a, b in zip(self.rates, self.rates[1:]):
            if not b.cars_per_hour > a.cars_per_hour:
                raise CatalogError("rate options must be strictly increasing in cars_per_hour")
        if not 1 <= self.nominal_rate_id <= len(self.rates):
            raise CatalogError("nominal_rate_id out of range")
        if len(self.monthly_targets) != N_MONTHS:
            raise CatalogError(f"expected {N_MONTHS} monthly targets")
        if any(t <= 0 for t in self.monthly_targets):
            raise CatalogError("monthly targets must be positive")
        if len(self.buffer_capacities) != 2:
            raise CatalogError("expected 2 buffer capacities (body->paint, paint->assembly)")
        if any(c <= 0 for c in self.buffer_capacities):
            raise CatalogError("buffer capacities must be positive")
        if self.idle_weight <= 0:
            raise CatalogError("idle_weight must be positive")
        if len(self.calendar) != N_MONTHS or any(d <= 0 for d in self.calendar):
            raise CatalogError("calendar must list 12 positive month lengths")
        if not 0 <= self.start_weekday <= 6:
            raise CatalogError("start_weekday must be 0..6")


def scheduled_hours(shift: ShiftSchedule, month: int, catalog: ProblemCatalog) -> float:
    """Hours the shift works in one month, tiling the weekly pattern across
    the month's calendar days starting on the true weekday."""
    if not 1 <= month <= N_MONTHS:
        raise ValueError(f"month must be 1..12, got {month}")
    start = catalog.month_start_day(month)
    total = 0.0
    for day in range(start, start + catalog.calendar[month - 1]):
        total += shift.daily_hours((catalog.start_weekday + day) % 7)
    return total


# ---------------------------------------------------------------------------
# Default catalog
# ---------------------------------------------------------------------------

def _block_pattern(days: int, shifts_per_day: int, block_hours: float) -> tuple[bool, ...]:
    """Weekly pattern: ``shifts_per_day`` back-to-back blocks of
    ``block_hours`` on the first ``days`` weekdays (Mon..Sat). Day coverage
    up to 18 h starts at 06:00; longer coverage starts at midnight."""
    daily = shifts_per_day * block_hours
    start_hour = 6.0 if daily <= 18.0 else 0.0
    start_slot = int(start_hour * 2)
    n_slots = int(daily * 2)
    week = [False] * SLOTS_PER_WEEK
    for d in range(days):
        for s in range(n_slots):
            week[d * SLOTS_PER_DAY + start_slot + s] = True
    return tuple(week)


def default_shifts() -> tuple[ShiftSchedule, ...]:
    """The 15 shipped schedules: {1,2,3 shifts/day} x {5,6 days} x
    {8 h, 7 h, 8.5 h blocks}, infeasible (>24 h/day) combinations dropped,
    reduced to the 15 smallest distinct weekly-hour totals."""
    combos = []
    for days in (5, 6):
        for spd in (1, 2, 3):
            for block in (8.0, 7.0, 8.5):
                if spd * block > 24.0:
                    continue
                combos.append((spd * block * days, days, spd, block))
    combos.sort()  # ascending weekly hours; totals are all distinct
    combos = combos[:N_SHIFTS]
    return tuple(
        ShiftSchedule(id=i + 1, weekly_pattern=_block_pattern(days, spd, block))
        for i, (_, days, spd, block) in enumerate(combos)
    )


def default_catalog(calendar: str = "2023") -> ProblemCatalog:
    """The shipped synthetic instance.

    ``calendar="2023"`` uses real month lengths (year starts on a Sunday);
    ``calendar="aligned"`` uses 12 x 28 days starting on a Monday so weekly
    tilings are exact.
    """
    if calendar == "2023":
        months, start = CALENDAR_2023, START_WEEKDAY_2023
    elif calendar == "aligned":
        months, start = CALENDAR_ALIGNED, 0
    else:
        raise ValueError(f"unknown calendar {calendar!r}")
    cat = ProblemCatalog(
        shifts=default_shifts(),
        rates=tuple(RateOption(i + 1, float(r)) for i, r in enumerate((40, 45, 50, 55, 60))),
        nominal_rate_id=3,
        monthly_targets=(30000.0,) * 12,
        buffer_capacities=(500, 700),
        idle_weight=1000.0,
        calendar=months,
        start_weekday=start,
    )
    cat.validate()
    return cat


# ---------------------------------------------------------------------------
# Catalog file format
# ---------------------------------------------------------------------------
#
# Line-oriented sections. '#' starts a comment. Shift rows are either the
# full 336-character 0/1 pattern or the shorthand
#   <id> days=<a>-<b> blocks=<HH:MM>-<HH:MM>[,<HH:MM>-<HH:MM>...]
# with days numbered 1=Monday .. 7=Sunday.
#
#   [meta]      start_weekday <name>
#   [shifts]    <id> <pattern-or-shorthand>
#   [rates]     <id> <cars_per_hour>
#   [targets]   12 numbers
#   [buffers]   2 integers
#   [weight]    1 number
#   [calendar]  12 month lengths
#   [nominal_rate]  rate id

def _parse_time(text: str, lineno: int) -> int:
    try:
        hh, mm = text.split(":")
        slot = int(hh) * 2 + {"00": 0, "30": 1}[mm]
    except (ValueError, KeyError):
        raise CatalogError(f"line {lineno}: bad time {text!r}, expected HH:00 or HH:30") from None
    if not 0 <= slot <= SLOTS_PER_DAY:
        raise CatalogError(f"line {lineno}: time {text!r} outside 00:00..24:00")
    return slot


def _parse_shift_line(line: str, lineno: int) -> ShiftSchedule:
    parts = line.split()
    try:
        sid = int(parts[0])
    except ValueError:
        raise CatalogError(f"line {lineno}: shift id must be an integer") from None
    if len(parts) == 2 and set(parts[1]) <= {"0", "1"}:
        if len(parts[1]) != SLOTS_PER_WEEK:
            raise CatalogError(
                f"line {lineno}: pattern has {len(parts[1])} characters, expected {SLOTS_PER_WEEK}"
            )
        return ShiftSchedule(sid, tuple(c == "1" for c in parts[1]))
    fields = dict(p.split("=", 1) for p in parts[1:] if "=" in p)
    if set(fields) != {"days", "blocks"}:
        raise CatalogError(f"line {lineno}: expected '<id> <pattern>' or '<id> days=.. blocks=..'")
    try:
        lo, hi = (int(x) for x in fields["days"].split("-"))
    except ValueError:
        raise CatalogError(f"line {lineno}: days must look like 1-5") from None
    if not 1 <= lo <= hi <= 7:
        raise CatalogError(f"line {lineno}: day range {lo}-{hi} outside 1..7")
    week = [False] * SLOTS_PER_WEEK
    for block in fields["blocks"].split(","):
        try:
            t0, t1 = block.split("-")
        except ValueError:
            raise CatalogError(f"line {lineno}: block {block!r} must be HH:MM-HH:MM") from None
        s0, s1 = _parse_time(t0, lineno), _parse_time(t1, lineno)
        if s1 <= s0:
            raise CatalogError(f"line {lineno}: block {block!r} ends before it starts")
        for d in range(lo - 1, hi):
            for s in range(s0, s1):
                week[d * SLOTS_PER_DAY + s] = True
    return ShiftSchedule(sid, tuple(week))


def loads_catalog(text: str) -> ProblemCatalog:
    """Parse catalog text; raise CatalogError with line context on bad input."""
    section = None
    shifts: list[ShiftSchedule] = []
    rates: list[RateOption] = []
    scalars: dict[str, list] = {}
    start_weekday = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            continue
        if section is None:
            raise CatalogError(f"line {lineno}: content before any [section]")
        if section == "meta":
            key, _, value = line.partition(" ")
            if key != "start_weekday":
                raise CatalogError(f"line {lineno}: unknown meta key {key!r}")
            value = value.strip().lower()
            if value not in WEEKDAY_NAMES:
                raise CatalogError(f"line {lineno}: unknown weekday {value!r}")
            start_weekday = WEEKDAY_NAMES.index(value)
        elif section == "shifts":
            shifts.append(_parse_shift_line(line, lineno))
        elif section == "rates":
            parts = line.split()
            if len(parts) != 2:
                raise CatalogError(f"line {lineno}: rate row must be '<id> <cars_per_hour>'")
            try:
                rates.append(RateOption(int(parts[0]), float(parts[1])))
            except ValueError:
                raise CatalogError(f"line {lineno}: bad rate row {line!r}") from None
        elif section in ("targets", "buffers", "weight", "calendar", "nominal_rate"):
            try:
                scalars.setdefault(section, []).extend(float(x) for x in line.split())
            except ValueError:
                raise CatalogError(f"line {lineno}: expected numbers in [{section}]") from None
        else:
            raise CatalogError(f"line {lineno}: unknown section [{section}]")

    def take(name: str, count: int) -> list[float]:
        values = scalars.get(name, [])
        if len(values) != count:
            raise CatalogError(f"section [{name}]: expected {count} values, got {len(values)}")
        return values

    if [s.id for s in shifts] != sorted(s.id for s in shifts):
        shifts.sort(key=lambda s: s.id)
    if len(shifts) != N_SHIFTS:
        raise CatalogError(f"expected {N_SHIFTS} shift schedules, got {len(shifts)}")
    cat = ProblemCatalog(
        shifts=tuple(shifts),
        rates=tuple(sorted(rates, key=lambda r: r.id)),
        nominal_rate_id=int(take("nominal_rate", 1)[0]),
        monthly_targets=tuple(take("targets", 12)),
        buffer_capacities=tuple(int(x) for x in take("buffers", 2)),  # type: ignore[arg-type]
        idle_weight=take("weight", 1)[0],
        calendar=tuple(int(x) for x in take("calendar", 12)),
        start_weekday=start_weekday,
    )
    cat.validate()
    return cat


def load_catalog(path: str | Path) -> ProblemCatalog:
    return loads_catalog(Path(path).read_text())


def dumps_catalog(catalog: ProblemCatalog) -> str:
    """Emit the canonical form (full 0/1 patterns). Round-trips bit-exactly."""
    out = ["# lineopt catalog", "[meta]", f"start_weekday {WEEKDAY_NAMES[catalog.start_weekday]}"]
    out.append("[shifts]")
    for s in catalog.shifts:
        out.append(f"{s.id} {''.join('1' if x else '0' for x in s.weekly_pattern)}")
    out.append("[rates]")
    for r in catalog.rates:
        out.append(f"{r.id} {r.cars_per_hour!r}")
    out.append("[nominal_rate]")
    out.append(str(catalog.nominal_rate_id))
    out.append("[targets]")
    out.append(" ".join(repr(t) for t in catalog.monthly_targets))
    out.append("[buffers]")
    out.append(f"{catalog.buffer_capacities[0]} {catalog.buffer_capacities[1]}")
    out.append("[weight]")
    out.append(repr(catalog.idle_weight))
    out.append("[calendar]")
    out.append(" ".join(str(d) for d in catalog.calendar))
    return "\n".join(out) + "\n"


def dump_catalog(catalog: ProblemCatalog, path: str | Path) -> None:
    Path(path).write_text(dumps_catalog(catalog))


def with_buffers(catalog: ProblemCatalog, body_paint: int, paint_assembly: int) -> ProblemCatalog:
    """Catalog variant with different storage-lot capacities (tests)."""
    return replace(catalog, buffer_capacities=(body_paint, paint_assembly))
