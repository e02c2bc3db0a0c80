import csv
from typing import Dict, List, Optional

import numpy as np

from constants.domain_constants import DEFAULT_SNAP_TOLERANCE_FRACTION
from libs.geometry.domain import Domain
from libs.geometry.linear_network import LinearNetwork
from libs.geometry.locations import Locations
from libs.internal_types import FloatArray
from libs.point_data.exceptions import PatternParseError, PointOffDomainError
from libs.utils.general_utils import log


PLANAR_COLUMNS = ("x", "y")
NETWORK_COLUMNS = ("segment", "offset")


class LoadReport:
    """ What happened to the rows of a point file on the way into a pattern. """

    def __init__(self):
        self.rows_read = 0
        self.dropped_off_domain = 0
        self.snapped = 0
        self.duplicates_removed = 0

    @property
    def kept(self) -> int:
        return self.rows_read - self.dropped_off_domain - self.duplicates_removed

    def as_dict(self) -> Dict[str, int]:
        return {
            "rows_read": self.rows_read,
            "kept": self.kept,
            "dropped_off_domain": self.dropped_off_domain,
            "snapped": self.snapped,
            "duplicates_removed": self.duplicates_removed,
        }

    def __repr__(self):
        return f"LoadReport({self.as_dict()})"


class PointPattern:
    """ The observed events on a domain.  Extra numeric columns of the source file are kept in
    `columns` (point-supplied covariates read them). """

    def __init__(
        self,
        locations: Locations,
        domain: Domain,
        columns: Optional[Dict[str, FloatArray]] = None,
        report: Optional[LoadReport] = None,
    ):
        domain.validate_locations(locations)
        columns = columns or {}
        for name, values in columns.items():
            if len(values) != len(locations):
                raise PatternParseError(f"column '{name}' has {len(values)} values for {len(locations)} points")
        self.locations = locations
        self.domain = domain
        self.columns = {name: np.asarray(values, dtype=float) for name, values in columns.items()}
        self.report = report

    @property
    def n(self) -> int:
        return len(self.locations)

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"PointPattern({self.n} points on {self.domain!r})"


def load_pattern(
    path: str,
    domain: Domain,
    strict: bool = True,
    snap_tolerance: Optional[float] = None,
    dedup: bool = False,
) -> PointPattern:
    """ Reads a point csv: x,y on planar windows, x,y and/or segment,offset on networks, plus any
    number of extra numeric columns.  Network points given only by x,y are snapped to the closest
    segment when within snap_tolerance (default 1% of the bounding-box diagonal).  Off-domain points
    raise PointOffDomainError in strict mode and are dropped with a warning otherwise.  dedup removes
    rows with exactly identical coordinates, keeping the first. """
    header, rows = _read_rows(path)
    report = LoadReport()
    report.rows_read = len(rows)
    on_network = isinstance(domain, LinearNetwork)

    has_xy = all(column in header for column in PLANAR_COLUMNS)
    has_segment_offset = all(column in header for column in NETWORK_COLUMNS)
    if not has_xy and not (on_network and has_segment_offset):
        if not rows and not header:
            return PointPattern(Locations.empty(on_network), domain, report=report)
        expected = "x,y or segment,offset" if on_network else "x,y"
        raise PatternParseError(f"{path}: expected columns {expected}, found {header}")

    extra_names = [name for name in header if name not in PLANAR_COLUMNS + NETWORK_COLUMNS]
    table = {name: _numeric_column(rows, i, name, path) for i, name in enumerate(header)}

    if on_network:
        locations, keep = _network_locations(table, domain, has_xy, has_segment_offset, snap_tolerance, report, path)
    else:
        locations = Locations(np.column_stack([table["x"], table["y"]]) if rows else np.zeros((0, 2)))
        keep = domain.contains(locations)

    if not np.all(keep):
        bad = np.flatnonzero(~keep)
        if strict:
            raise PointOffDomainError(
                f"{path}: {len(bad)} point(s) are off the domain, first at data row {bad[0] + 1}"
            )
        report.dropped_off_domain = len(bad)
        log.warning(f"dropped {len(bad)} off-domain point(s) from {path}")

    if dedup and len(locations):
        _, first_seen = np.unique(locations.coords, axis=0, return_index=True)
        unique_rows = np.zeros(len(locations), dtype=bool)
        unique_rows[first_seen] = True
        duplicates = keep & ~unique_rows
        report.duplicates_removed = int(duplicates.sum())
        keep = keep & unique_rows
        if report.duplicates_removed:
            log.info(f"removed {report.duplicates_removed} duplicate point(s) from {path}")

    kept_index = np.flatnonzero(keep)
    columns = {name: table[name][kept_index] for name in extra_names}
    return PointPattern(locations[kept_index], domain, columns, report)


def save_pattern(pattern: PointPattern, path: str):
    """ Writes coordinates with repr() so that reloading is bit-identical. """
    header = list(PLANAR_COLUMNS)
    if pattern.locations.on_network:
        header += list(NETWORK_COLUMNS)
    header += list(pattern.columns)

    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for i in range(pattern.n):
            row = [repr(float(pattern.locations.coords[i, 0])), repr(float(pattern.locations.coords[i, 1]))]
            if pattern.locations.on_network:
                row += [int(pattern.locations.segments[i]), repr(float(pattern.locations.offsets[i]))]
            row += [repr(float(pattern.columns[name][i])) for name in pattern.columns]
            writer.writerow(row)


def _network_locations(table, network: LinearNetwork, has_xy, has_segment_offset, snap_tolerance, report, path):
    if has_segment_offset:
        segments = table["segment"].astype(np.int64)
        if not np.array_equal(segments, table["segment"]):
            raise PatternParseError(f"{path}: segment ids must be integers")
        offsets = table["offset"]
        keep = (segments >= 0) & (segments < network.n_segments)
        # keep the file's own coordinates when present, so a save/load cycle is bit-identical.
        coords = np.column_stack([table["x"], table["y"]]) if has_xy else np.zeros((len(segments), 2))
        if not has_xy and keep.any():
            coords[keep] = network.coordinates_at(segments[keep], np.clip(offsets[keep], 0, None))
        locations = Locations(coords, segments, offsets)
        return locations, keep & network.contains(locations)

    coords = np.column_stack([table["x"], table["y"]]) if len(table["x"]) else np.zeros((0, 2))
    if snap_tolerance is None:
        snap_tolerance = DEFAULT_SNAP_TOLERANCE_FRACTION * network.diagonal()
    segments, offsets, gaps = network.project(coords)
    keep = gaps <= snap_tolerance
    report.snapped = int(np.sum(keep & (gaps > 0)))
    if report.snapped:
        log.warning(f"snapped {report.snapped} point(s) from {path} onto the network")
    return network.locations_at(segments, offsets), keep


def _read_rows(path: str):
    try:
        with open(path, newline="") as f:
            reader = csv.reader(f)
            all_rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    except OSError as e:
        raise PatternParseError(f"could not read {path}: {e}")
    if not all_rows:
        return [], []
    header = [cell.strip() for cell in all_rows[0]]
    if len(set(header)) != len(header):
        raise PatternParseError(f"{path}: duplicate column names in {header}")
    rows: List[List[str]] = all_rows[1:]
    for line_number, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise PatternParseError(f"{path}: line {line_number} has {len(row)} fields, the header has {len(header)}")
    return header, rows


def _numeric_column(rows: List[List[str]], index: int, name: str, path: str) -> FloatArray:
    # locale independent, python's float() only accepts a decimal point.
    values = np.empty(len(rows))
    for line_number, row in enumerate(rows, start=2):
        try:
            values[line_number - 2] = float(row[index])
        except ValueError:
            raise PatternParseError(f"{path}: line {line_number}, column '{name}': '{row[index]}' is not a number")
    return values
