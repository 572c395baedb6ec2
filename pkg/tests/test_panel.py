"""Panel ingestion, alignment, and serialization tests."""

import os
import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from factoriv.panel import (
    AlignmentError,
    DateIndex,
    FactorPanel,
    LaborIncomeSeries,
    ParseError,
    align_panels,
    common_months,
    descriptive_stats,
    parse_ff_csv,
    parse_quarterly_csv,
    read_panel_csv,
    write_panel_csv,
)

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")
FACTORS_FILE = os.path.join(FIXTURES, "factors_monthly.txt")
LABOR_FILE = os.path.join(FIXTURES, "labor_quarterly.csv")


def first_block_rows(path):
    """Independent row count: YYYYMM-keyed lines of the first contiguous block."""
    rows = []
    started = False
    with open(path) as fh:
        for line in fh:
            key = line.split(",")[0].strip()
            if re.fullmatch(r"\d{6}", key):
                rows.append(line)
                started = True
            elif started:
                break
    return rows


class TestDateIndex:
    def test_month_range(self):
        idx = DateIndex.month_range((1999, 11), (2000, 2))
        assert idx.labels() == ["1999-11", "1999-12", "2000-01", "2000-02"]

    def test_from_ym_rejects_gap(self):
        with pytest.raises(ValueError, match="gap after 1986-02"):
            DateIndex.from_ym([(1986, 1), (1986, 2), (1986, 4)])

    def test_from_serials_allows_gap(self):
        idx = DateIndex.from_serials(np.array([100, 101, 105]))
        assert len(idx) == 3

    def test_range_mask(self):
        idx = DateIndex.month_range((1990, 1), (1990, 12))
        mask = idx.range_mask((1990, 3), (1990, 5))
        assert mask.sum() == 3
        assert idx.labels()[np.argmax(mask)] == "1990-03"


class TestParseFfCsv:
    def test_row_count_matches_regex_oracle(self):
        panel = parse_ff_csv(FACTORS_FILE)
        assert len(panel.dates) == len(first_block_rows(FACTORS_FILE))

    def test_columns_and_range(self):
        panel = parse_ff_csv(FACTORS_FILE)
        assert panel.names == ["Mkt-RF", "SMB", "HML", "RMW", "CMA", "RF"]
        assert panel.dates.label(0) == "1986-01"
        assert panel.dates.label(len(panel.dates) - 1) == "1999-12"

    def test_annual_block_ignored(self):
        panel = parse_ff_csv(FACTORS_FILE)
        # the file continues with annual rows; the monthly block ends in 1999
        assert len(panel.dates) == 168

    def test_sentinels_become_missing(self):
        panel = parse_ff_csv(FACTORS_FILE)
        i = panel.dates.labels().index("1990-06")
        j = panel.names.index("CMA")
        assert np.isnan(panel.values[i, j])
        i2 = panel.dates.labels().index("1995-03")
        assert np.isnan(panel.values[i2, panel.names.index("RMW")])
        assert panel.missing_mask.sum() == 2

    def test_values_match_file_text(self):
        panel = parse_ff_csv(FACTORS_FILE)
        row = first_block_rows(FACTORS_FILE)[7].strip().split(",")
        assert_array_equal(panel.values[7], [float(v) for v in row[1:]])

    def test_sentinel_match_is_exact(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text(",A\n198601,-99.989\n198602,-99.99\n")
        panel = parse_ff_csv(p)
        assert panel.values[0, 0] == -99.989
        assert np.isnan(panel.values[1, 0])

    def test_explicit_columns_override_header(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("junk junk\n198601,1.0,2.0\n")
        panel = parse_ff_csv(p, columns=["X", "Y"])
        assert panel.names == ["X", "Y"]

    def test_no_monthly_rows(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("just prose\nno data\n")
        with pytest.raises(ParseError, match="no monthly"):
            parse_ff_csv(p)

    def test_ragged_row(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text(",A,B\n198601,1.0,2.0\n198602,1.0\n")
        with pytest.raises(ParseError, match="expected 2 values"):
            parse_ff_csv(p)

    def test_bad_float_reports_line(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text(",A\n198601,1.0\n198602,oops\n")
        with pytest.raises(ParseError, match=r"f\.csv:3"):
            parse_ff_csv(p)

    def test_bad_month_key(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text(",A\n198613,1.0\n")
        with pytest.raises(ParseError, match="malformed month key"):
            parse_ff_csv(p)

    def test_month_gap_rejected(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text(",A\n198601,1.0\n198603,2.0\n")
        with pytest.raises(ParseError, match="gap"):
            parse_ff_csv(p)

    def test_whitespace_layout(self, tmp_path):
        p = tmp_path / "f.txt"
        p.write_text("  Mkt-RF   SMB\n198601   1.10  -0.20\n198602   0.30   0.40\n")
        panel = parse_ff_csv(p)
        assert panel.names == ["Mkt-RF", "SMB"]
        assert_allclose(panel.values[1], [0.30, 0.40])


class TestQuarterly:
    def test_fixture_counts(self):
        series = parse_quarterly_csv(LABOR_FILE)
        assert len(series.rows) == 56
        assert series.rows[0][:2] == (1986, 1)
        assert series.rows[-1][:2] == (1999, 4)

    def test_to_monthly_replicates_each_quarter(self):
        series = LaborIncomeSeries([(1986, 1, 17.0), (1986, 2, 17.4)])
        panel = series.to_monthly("LBR")
        assert panel.dates.labels() == [
            "1986-01", "1986-02", "1986-03", "1986-04", "1986-05", "1986-06",
        ]
        assert_array_equal(panel.values[:, 0], [17.0, 17.0, 17.0, 17.4, 17.4, 17.4])

    def test_each_value_appears_three_times(self):
        series = parse_quarterly_csv(LABOR_FILE)
        panel = series.to_monthly()
        vals = panel.values[:, 0]
        assert len(vals) == 3 * len(series.rows)
        assert_array_equal(vals[0::3], vals[1::3])
        assert_array_equal(vals[0::3], vals[2::3])

    def test_q_prefix_and_header(self, tmp_path):
        p = tmp_path / "q.csv"
        p.write_text("year,quarter,value\n1990,Q1,1.5\n1990,2,2.5\n")
        series = parse_quarterly_csv(p)
        assert series.rows == [(1990, 1, 1.5), (1990, 2, 2.5)]

    def test_bad_quarter(self, tmp_path):
        p = tmp_path / "q.csv"
        p.write_text("1990,5,1.5\n")
        with pytest.raises(ParseError):
            parse_quarterly_csv(p)

    def test_unsorted_rows(self):
        with pytest.raises(ValueError, match="sorted"):
            LaborIncomeSeries([(1990, 2, 1.0), (1990, 1, 2.0)])


def _panel(start, values, names, label=""):
    n = np.asarray(values, dtype=float)
    dates = DateIndex.from_serials(
        np.arange(start, start + n.shape[0], dtype=np.int64)
    )
    return FactorPanel(dates, names, n, label=label)


class TestAlign:
    def test_inner_join_and_listwise_drop(self):
        a = _panel(0, [[1.0], [2.0], [np.nan], [4.0]], ["A"])
        b = _panel(1, [[10.0], [20.0], [30.0], [40.0]], ["B"])
        out = align_panels([a, b])
        # overlap is serials 1..3; serial 2 is dropped for the NaN in A
        assert_array_equal(out.dates.serials, [1, 3])
        assert_array_equal(out.values, [[2.0, 10.0], [4.0, 30.0]])

    def test_duplicate_column_rejected(self):
        a = _panel(0, [[1.0]], ["A"])
        b = _panel(0, [[2.0]], ["A"])
        with pytest.raises(AlignmentError, match="duplicate column"):
            align_panels([a, b])

    def test_disjoint_ranges_named(self):
        a = _panel(0, [[1.0]], ["A"], label="first")
        b = _panel(10, [[2.0]], ["B"], label="second")
        with pytest.raises(AlignmentError, match="first.*second"):
            align_panels([a, b])

    def test_range_clipping(self):
        a = _panel(0, [[float(i)] for i in range(24)], ["A"])
        out = align_panels([a], start=(0, 7), end=(0, 9))
        # serial 0 is year 0 month 1, so months 7..9 are serials 6..8
        assert_array_equal(out.dates.serials, [6, 7, 8])

    def test_common_months(self):
        a = _panel(0, [[1.0], [2.0]], ["A"])
        b = _panel(1, [[1.0], [2.0]], ["B"])
        assert_array_equal(common_months([a, b]), [1])

    @settings(max_examples=40, deadline=None)
    @given(
        offsets=st.lists(st.integers(0, 3), min_size=2, max_size=4),
        lengths=st.lists(st.integers(4, 9), min_size=2, max_size=4),
        miss=st.integers(0, 11),
        order=st.randoms(use_true_random=False),
    )
    def test_order_invariance(self, offsets, lengths, miss, order):
        n = min(len(offsets), len(lengths))
        panels = []
        for i in range(n):
            vals = np.arange(lengths[i], dtype=float)[:, None] + 10 * i
            if miss % lengths[i] < vals.shape[0]:
                vals[miss % lengths[i], 0] = np.nan
            panels.append(_panel(offsets[i], vals, [f"C{i}"]))
        shuffled = panels[:]
        order.shuffle(shuffled)
        try:
            base = align_panels(panels)
        except AlignmentError:
            with pytest.raises(AlignmentError):
                align_panels(shuffled)
            return
        other = align_panels(shuffled)
        assert_array_equal(base.dates.serials, other.dates.serials)
        for name in base.names:
            assert_array_equal(base.column(name), other.column(name))


class TestStatsAndCsv:
    def test_descriptive_stats_against_loops(self):
        panel = parse_ff_csv(FACTORS_FILE)
        stats = descriptive_stats(panel)
        col = panel.values[:, panel.names.index("RMW")]
        obs = col[~np.isnan(col)]
        s = stats["RMW"]
        assert s["count"] == len(obs) == 167
        assert_allclose(s["mean"], sum(obs) / len(obs))
        m = s["mean"]
        assert_allclose(s["sd"], (sum((v - m) ** 2 for v in obs) / (len(obs) - 1)) ** 0.5)
        assert s["min"] == min(obs) and s["max"] == max(obs)

    def test_all_missing_column(self):
        p = _panel(0, [[np.nan], [np.nan]], ["A"])
        with pytest.raises(ValueError, match="entirely missing"):
            descriptive_stats(p)

    def test_roundtrip_exact(self, tmp_path):
        panel = parse_ff_csv(FACTORS_FILE)
        path = tmp_path / "out.csv"
        write_panel_csv(panel, path)
        back = read_panel_csv(path)
        assert back.names == panel.names
        assert_array_equal(back.dates.serials, panel.dates.serials)
        assert_array_equal(
            np.where(np.isnan(back.values), -1.0, back.values),
            np.where(np.isnan(panel.values), -1.0, panel.values),
        )

    def test_roundtrip_preserves_gaps(self, tmp_path):
        p = _panel(5, [[1.0], [2.0], [3.0]], ["A"])
        gappy = FactorPanel(DateIndex.from_serials(np.array([5, 7, 11])), ["A"], p.values)
        path = tmp_path / "gap.csv"
        write_panel_csv(gappy, path)
        back = read_panel_csv(path)
        assert_array_equal(back.dates.serials, [5, 7, 11])
