"""Monthly factor and portfolio panels: parsing, alignment, descriptive stats.

Values are kept in the units of the source file (percent returns stay in
percent); nothing here rescales data.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

# Sentinel values some published return files use for missing cells.
DEFAULT_SENTINELS = (-99.99, -999.0)

_MONTH_KEY = re.compile(r"^\d{6}$")
_LABEL_KEY = re.compile(r"^(\d{4})-(\d{2})$")


class ParseError(ValueError):
    """Raised when an input file cannot be interpreted."""


class AlignmentError(ValueError):
    """Raised when panels cannot be joined on a common month range."""


def _serial(year: int, month: int) -> int:
    return year * 12 + (month - 1)


@dataclass
class DateIndex:
    """Strictly increasing month index, stored as year*12 + (month-1).

    Parsed source files must be contiguous; panels that went through
    listwise deletion may carry gaps (see ``from_serials``).
    """

    serials: np.ndarray

    def __post_init__(self):
        self.serials = np.asarray(self.serials, dtype=np.int64)
        if self.serials.ndim != 1:
            raise ValueError("DateIndex requires a 1-d serial array")
        if len(self.serials) and np.any(np.diff(self.serials) <= 0):
            raise ValueError("dates must be strictly increasing")

    @classmethod
    def from_ym(cls, pairs, require_contiguous: bool = True) -> "DateIndex":
        serials = np.array([_serial(y, m) for y, m in pairs], dtype=np.int64)
        idx = cls(serials)
        if require_contiguous and len(serials) > 1 and np.any(np.diff(serials) != 1):
            gap = int(np.flatnonzero(np.diff(serials) != 1)[0])
            raise ValueError(
                f"month index has a gap after {idx.label(gap)} (contiguous months required)"
            )
        return idx

    @classmethod
    def from_serials(cls, serials) -> "DateIndex":
        """Build an index that may contain gaps (post-deletion panels)."""
        return cls(np.asarray(serials, dtype=np.int64))

    @classmethod
    def month_range(cls, start: tuple[int, int], end: tuple[int, int]) -> "DateIndex":
        s, e = _serial(*start), _serial(*end)
        if e < s:
            raise ValueError(f"empty month range {start}..{end}")
        return cls(np.arange(s, e + 1, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.serials)

    def year_month(self, i: int) -> tuple[int, int]:
        s = int(self.serials[i])
        return s // 12, s % 12 + 1

    def label(self, i: int) -> str:
        y, m = self.year_month(i)
        return f"{y:04d}-{m:02d}"

    def labels(self) -> list[str]:
        return [self.label(i) for i in range(len(self))]

    def range_mask(self, start: tuple[int, int] | None, end: tuple[int, int] | None) -> np.ndarray:
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= self.serials >= _serial(*start)
        if end is not None:
            mask &= self.serials <= _serial(*end)
        return mask

    def equals(self, other: "DateIndex") -> bool:
        return np.array_equal(self.serials, other.serials)


@dataclass
class FactorPanel:
    """Named monthly series; missing cells are NaN, everything else finite."""

    dates: DateIndex
    names: list[str]
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("panel values must be 2-d")
        if self.values.shape != (len(self.dates), len(self.names)):
            raise ValueError(
                f"panel shape {self.values.shape} does not match "
                f"{len(self.dates)} dates x {len(self.names)} columns"
            )
        if len(set(self.names)) != len(self.names):
            raise ValueError("panel column names must be unique")
        if np.any(np.isinf(self.values)):
            raise ValueError("panel cells must be finite or missing (NaN)")

    @property
    def missing_mask(self) -> np.ndarray:
        return np.isnan(self.values)

    @property
    def nobs(self) -> int:
        return len(self.dates)

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.names.index(name)
        except ValueError:
            raise KeyError(f"panel {self.label or '<unnamed>'} has no column {name!r}") from None
        return self.values[:, j]


@dataclass
class LaborIncomeSeries:
    """Quarterly observations (year, quarter, value)."""

    rows: list[tuple[int, int, float]]
    label: str = ""

    def __post_init__(self):
        for y, q, _ in self.rows:
            if not 1 <= q <= 4:
                raise ValueError(f"quarter out of range in {self.label or 'series'}: {y}Q{q}")
        keys = [(y, q) for y, q, _ in self.rows]
        if keys != sorted(keys):
            raise ValueError("quarterly rows must be sorted by (year, quarter)")
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate quarter in labor income series")

    def to_monthly(self, name: str = "LBR") -> FactorPanel:
        """Replicate each quarterly value into its three months.

        No interpolation: within a quarter all three months carry the
        quarter's value, so each value appears exactly three times.
        """
        pairs, vals = [], []
        for y, q, v in self.rows:
            for m in (3 * q - 2, 3 * q - 1, 3 * q):
                pairs.append((y, m))
                vals.append(v)
        dates = DateIndex.from_ym(pairs)
        return FactorPanel(dates, [name], np.array(vals)[:, None], label=self.label or name)


def quarterly_to_monthly(series: LaborIncomeSeries, name: str = "LBR") -> FactorPanel:
    return series.to_monthly(name)


def _split_line(line: str) -> list[str]:
    if "," in line:
        return [tok.strip() for tok in line.split(",")]
    return line.split()


def parse_ff_csv(
    path,
    columns: list[str] | None = None,
    sentinels=DEFAULT_SENTINELS,
    label: str | None = None,
) -> FactorPanel:
    """Parse a published monthly-returns text file (Kenneth French layout).

    The file may open with prose lines and may close with annual summary
    blocks; only the first contiguous block of YYYYMM rows is ingested.
    Column names come from the header line directly above that block
    unless ``columns`` is given. Cells equal to a sentinel become missing.
    """
    sentinels = tuple(float(s) for s in sentinels)
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    start = None
    for i, line in enumerate(lines):
        toks = _split_line(line)
        if toks and _MONTH_KEY.match(toks[0]):
            start = i
            break
    if start is None:
        raise ParseError(f"{path}: no monthly (YYYYMM) rows found")

    names = columns
    if names is None:
        for j in range(start - 1, -1, -1):
            toks = [t for t in _split_line(lines[j]) if t]
            if toks:
                names = toks
                break
        if names is None:
            raise ParseError(f"{path}: no header line above the monthly block")

    pairs: list[tuple[int, int]] = []
    rows: list[list[float]] = []
    for lineno in range(start, len(lines)):
        toks = _split_line(lines[lineno])
        toks = toks if toks and toks[-1] != "" else toks[:-1]  # trailing delimiter
        if not toks or not _MONTH_KEY.match(toks[0]):
            break  # end of the monthly block; annual summaries etc. are tolerated
        key = toks[0]
        year, month = int(key[:4]), int(key[4:6])
        if not 1 <= month <= 12:
            raise ParseError(f"{path}:{lineno + 1}: malformed month key {key!r}")
        cells = toks[1:]
        if len(cells) != len(names):
            raise ParseError(
                f"{path}:{lineno + 1}: expected {len(names)} values, found {len(cells)}"
            )
        try:
            vals = [float(c) for c in cells]
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno + 1}: {exc}") from None
        vals = [np.nan if v in sentinels else v for v in vals]
        pairs.append((year, month))
        rows.append(vals)

    if not rows:
        raise ParseError(f"{path}: monthly block is empty")
    try:
        dates = DateIndex.from_ym(pairs)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return FactorPanel(dates, list(names), np.array(rows), label=label or str(path))


def parse_quarterly_csv(path, label: str | None = None) -> LaborIncomeSeries:
    """Parse a plain year,quarter,value CSV (header optional, Q prefix allowed)."""
    rows: list[tuple[int, int, float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            toks = [t.strip() for t in line.strip().split(",") if t.strip() != ""]
            if not toks:
                continue
            if lineno == 1 and not toks[0].lstrip("-").isdigit():
                continue  # header
            if len(toks) != 3:
                raise ParseError(f"{path}:{lineno}: expected year,quarter,value")
            try:
                year = int(toks[0])
                qtok = toks[1].upper().lstrip("Q")
                quarter = int(qtok)
                value = float(toks[2])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            rows.append((year, quarter, value))
    if not rows:
        raise ParseError(f"{path}: no quarterly rows found")
    try:
        return LaborIncomeSeries(rows, label=label or str(path))
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None


def common_months(
    panels,
    start: tuple[int, int] | None = None,
    end: tuple[int, int] | None = None,
) -> np.ndarray:
    """Sorted month serials present in every panel, clipped to [start, end]."""
    panels = list(panels)
    if not panels:
        raise AlignmentError("no panels to align")
    common = None
    for p in panels:
        s = set(p.dates.serials[p.dates.range_mask(start, end)].tolist())
        common = s if common is None else (common & s)
    if not common:
        names = ", ".join(p.label or f"panel{i}" for i, p in enumerate(panels))
        raise AlignmentError(f"no overlapping months among: {names}")
    return np.array(sorted(common), dtype=np.int64)


def align_panels(
    panels,
    start: tuple[int, int] | None = None,
    end: tuple[int, int] | None = None,
    label: str = "aligned",
) -> FactorPanel:
    """Inner-join panels on the month index, then drop incomplete rows.

    Rows with any missing cell are deleted listwise (count logged). The
    result may therefore have gaps in its month index.
    """
    panels = list(panels)
    serials = common_months(panels, start, end)
    names: list[str] = []
    blocks = []
    for p in panels:
        for n in p.names:
            if n in names:
                raise AlignmentError(f"duplicate column {n!r} across panels")
        names.extend(p.names)
        pos = {int(s): i for i, s in enumerate(p.dates.serials)}
        take = np.array([pos[int(s)] for s in serials], dtype=np.int64)
        blocks.append(p.values[take])
    values = np.hstack(blocks)

    keep = ~np.isnan(values).any(axis=1)
    dropped = int((~keep).sum())
    if dropped:
        logger.info("align_panels: dropped %d incomplete row(s) listwise", dropped)
    if not keep.any():
        raise AlignmentError("every joined row has a missing cell")
    return FactorPanel(DateIndex.from_serials(serials[keep]), names, values[keep], label=label)


def descriptive_stats(panel: FactorPanel) -> dict[str, dict[str, float]]:
    """Per-column mean, sample sd (n-1), min, max, count over non-missing cells."""
    out: dict[str, dict[str, float]] = {}
    for j, name in enumerate(panel.names):
        col = panel.values[:, j]
        obs = col[~np.isnan(col)]
        if obs.size == 0:
            raise ValueError(f"column {name!r} is entirely missing")
        if obs.size < 2:
            raise ValueError(f"column {name!r} has fewer than 2 observations")
        out[name] = {
            "mean": float(obs.mean()),
            "sd": float(obs.std(ddof=1)),
            "min": float(obs.min()),
            "max": float(obs.max()),
            "count": float(obs.size),
        }
    return out


def write_panel_csv(panel: FactorPanel, path) -> None:
    """Write ``date,<columns>`` with YYYY-MM keys; missing cells are empty.

    Values use repr round-trip formatting so a re-parse is lossless.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date"] + panel.names)
        for i in range(panel.nobs):
            row = [panel.dates.label(i)]
            for v in panel.values[i]:
                row.append("" if np.isnan(v) else repr(float(v)))
            w.writerow(row)


def read_panel_csv(path, label: str | None = None) -> FactorPanel:
    """Read a panel written by :func:`write_panel_csv` (gaps allowed)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if not header or header[0] != "date":
            raise ParseError(f"{path}: first header cell must be 'date'")
        names = header[1:]
        serials, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            m = _LABEL_KEY.match(row[0])
            if not m:
                raise ParseError(f"{path}:{lineno}: malformed date label {row[0]!r}")
            if len(row) - 1 != len(names):
                raise ParseError(
                    f"{path}:{lineno}: expected {len(names)} values, found {len(row) - 1}"
                )
            month = int(m.group(2))
            if not 1 <= month <= 12:
                raise ParseError(f"{path}:{lineno}: month out of range in {row[0]!r}")
            serials.append(_serial(int(m.group(1)), month))
            try:
                rows.append([np.nan if c == "" else float(c) for c in row[1:]])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    try:
        dates = DateIndex.from_serials(serials)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return FactorPanel(dates, names, np.array(rows), label=label or str(path))
