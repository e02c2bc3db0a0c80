import csv
from os.path import join
from typing import Dict, List

import numpy as np

from libs.internal_types import JsonDict
from libs.point_data.covariates import (Covariate, CovariateField, PointColumnCovariate,
    RasterCovariate, SegmentCovariate)
from libs.point_data.exceptions import CovariateFileError
from libs.point_data.point_pattern import PointPattern


ESRI_REQUIRED_KEYS = ("ncols", "nrows", "cellsize")
CSV_GRID_HEADER = ("nx", "ny", "xmin", "xmax", "ymin", "ymax")


class CovariateKind:
    raster = "raster"
    segment = "segment"
    points = "points"

    @classmethod
    def values(cls):
        return [cls.raster, cls.segment, cls.points]


def load_esri_ascii(path: str, name: str) -> RasterCovariate:
    """ ESRI ASCII grid: a key/value header (ncols, nrows, xllcorner or xllcenter, yllcorner or
    yllcenter, cellsize, optional NODATA_value) followed by nrows rows listed north first. """
    try:
        with open(path) as f:
            lines = [line.split() for line in f if line.strip()]
    except OSError as e:
        raise CovariateFileError(f"could not read {path}: {e}")

    header: Dict[str, float] = {}
    while lines and lines[0] and lines[0][0][0].isalpha():
        key, value = lines.pop(0)[:2]
        header[key.lower()] = _number(value, path)
    missing = [key for key in ESRI_REQUIRED_KEYS if key not in header]
    if missing:
        raise CovariateFileError(f"{path}: missing header keys {missing}")

    nx, ny, cell = int(header["ncols"]), int(header["nrows"]), header["cellsize"]
    if "xllcorner" in header:
        x0 = header["xllcorner"]
    elif "xllcenter" in header:
        x0 = header["xllcenter"] - cell / 2
    else:
        raise CovariateFileError(f"{path}: needs xllcorner or xllcenter")
    if "yllcorner" in header:
        y0 = header["yllcorner"]
    elif "yllcenter" in header:
        y0 = header["yllcenter"] - cell / 2
    else:
        raise CovariateFileError(f"{path}: needs yllcorner or yllcenter")

    values = np.array([[_number(v, path) for v in row] for row in lines], dtype=float)
    if values.shape != (ny, nx):
        raise CovariateFileError(f"{path}: expected {ny} rows of {nx} values, found shape {values.shape}")
    if "nodata_value" in header:
        values[values == header["nodata_value"]] = np.nan
    return RasterCovariate(name, (x0, x0 + nx * cell), (y0, y0 + ny * cell), values[::-1])


def load_csv_grid(path: str, name: str) -> RasterCovariate:
    """ CSV grid: a header row nx,ny,xmin,xmax,ymin,ymax, one row with those values, then ny rows of
    nx values listed north first.  Empty cells and 'nan' are missing data. """
    try:
        with open(path, newline="") as f:
            rows = [row for row in csv.reader(f) if row]
    except OSError as e:
        raise CovariateFileError(f"could not read {path}: {e}")
    if len(rows) < 2 or tuple(cell.strip() for cell in rows[0]) != CSV_GRID_HEADER:
        raise CovariateFileError(f"{path}: the first row must be {','.join(CSV_GRID_HEADER)}")

    nx, ny, x0, x1, y0, y1 = (_number(v, path) for v in rows[1])
    nx, ny = int(nx), int(ny)
    grid = [[_number(v, path) if v.strip() else np.nan for v in row] for row in rows[2:]]
    values = np.array(grid, dtype=float)
    if values.shape != (ny, nx):
        raise CovariateFileError(f"{path}: expected {ny} rows of {nx} values, found shape {values.shape}")
    return RasterCovariate(name, (x0, x1), (y0, y1), values[::-1])


def save_csv_grid(raster: RasterCovariate, path: str):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_GRID_HEADER)
        writer.writerow([raster.nx, raster.ny, repr(raster.x_range[0]), repr(raster.x_range[1]),
                         repr(raster.y_range[0]), repr(raster.y_range[1])])
        for row in raster.values[::-1]:
            writer.writerow(["" if np.isnan(v) else repr(float(v)) for v in row])


def load_raster(path: str, name: str) -> RasterCovariate:
    if path.lower().endswith((".asc", ".ascii")):
        return load_esri_ascii(path, name)
    return load_csv_grid(path, name)


def covariate_field_from_config(
    specs: List[JsonDict], pattern: PointPattern, base_directory: str = "", standardize: bool = True
) -> CovariateField:
    """ Builds the field from the "covariates" block of a run configuration, a list of
        {"name": .., "type": "raster", "path": ..}
        {"name": .., "type": "segment", "values": [per segment], "pieces": [[segment, start, end, value]]}
        {"name": .., "type": "points", "column": ..}   (a column of the point file) """
    covariates: List[Covariate] = []
    for spec in specs:
        name, kind = spec.get("name"), spec.get("type")
        if not name:
            raise CovariateFileError(f"every covariate needs a name, received {spec}")
        if kind == CovariateKind.raster:
            covariates.append(load_raster(join(base_directory, spec["path"]), name))
        elif kind == CovariateKind.segment:
            covariates.append(SegmentCovariate(name, spec.get("values", []), spec.get("pieces", ())))
        elif kind == CovariateKind.points:
            column = spec.get("column", name)
            if column not in pattern.columns:
                raise CovariateFileError(f"the point file has no column '{column}' for covariate '{name}'")
            covariates.append(PointColumnCovariate(name, pattern.locations, pattern.columns[column]))
        else:
            raise CovariateFileError(f"covariate '{name}' has unknown type '{kind}', expected {CovariateKind.values()}")
    return CovariateField(covariates, standardize=standardize)


def _number(value: str, path: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise CovariateFileError(f"{path}: '{value}' is not a number")
