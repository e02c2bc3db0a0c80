import csv
import json
from os.path import dirname, join
from typing import Dict, List, Tuple, Union

import numpy as np

from constants.domain_constants import DomainType, EDGES_CSV_FIELDS, NODES_CSV_FIELDS
from libs.geometry.domain import Domain
from libs.geometry.exceptions import DomainConstructionError, DomainFileError
from libs.geometry.linear_network import LinearNetwork
from libs.geometry.planar_window import PlanarWindow
from libs.internal_types import JsonDict


"""
Domain file formats.

    network   nodes.csv (id,x,y) and edges.csv (id,from,to), or a GeoJSON collection of
              LineString / MultiLineString features (consecutive coordinates become segments,
              vertices with identical coordinates are merged).
    planar    window.json: {"x_range": [x0, x1], "y_range": [y0, y1], "nx": .., "ny": ..,
              "units": "", "mask": optional rows of 0/1 bottom row first,
              "polygon": optional GeoJSON Polygon geometry (outer ring then holes)}
"""


#
## network
#

def load_network_csv(nodes_path: str, edges_path: str, units: str = "") -> LinearNetwork:
    node_rows = _read_csv(nodes_path, NODES_CSV_FIELDS)
    edge_rows = _read_csv(edges_path, EDGES_CSV_FIELDS)

    index_of: Dict[str, int] = {}
    vertices = []
    for row in node_rows:
        if row["id"] in index_of:
            raise DomainFileError(f"{nodes_path}: duplicate node id '{row['id']}'")
        index_of[row["id"]] = len(vertices)
        vertices.append((_parse_float(row["x"], nodes_path), _parse_float(row["y"], nodes_path)))

    segments = []
    for row in edge_rows:
        try:
            segments.append((index_of[row["from"]], index_of[row["to"]]))
        except KeyError as e:
            raise DomainFileError(f"{edges_path}: edge '{row['id']}' references unknown node {e}")
    return LinearNetwork(np.array(vertices, dtype=float), np.array(segments, dtype=np.int64), units)


def save_network_csv(network: LinearNetwork, nodes_path: str, edges_path: str):
    with open(nodes_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(NODES_CSV_FIELDS)
        for i, (x, y) in enumerate(network.vertices):
            writer.writerow([i, repr(float(x)), repr(float(y))])
    with open(edges_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(EDGES_CSV_FIELDS)
        for i, (a, b) in enumerate(network.segments):
            writer.writerow([i, int(a), int(b)])


def load_network_geojson(path: str, units: str = "") -> LinearNetwork:
    document = _read_json(path)
    if document.get("type") == "FeatureCollection":
        geometries = [feature.get("geometry") or {} for feature in document.get("features", [])]
    elif document.get("type") == "Feature":
        geometries = [document.get("geometry") or {}]
    else:
        geometries = [document]

    index_of: Dict[Tuple[float, float], int] = {}
    segments: List[Tuple[int, int]] = []

    def vertex(point) -> int:
        key = (float(point[0]), float(point[1]))
        if key not in index_of:
            index_of[key] = len(index_of)
        return index_of[key]

    for geometry in geometries:
        kind = geometry.get("type")
        if kind == "LineString":
            lines = [geometry["coordinates"]]
        elif kind == "MultiLineString":
            lines = geometry["coordinates"]
        else:
            raise DomainFileError(f"{path}: unsupported geometry type '{kind}' in a network file")
        for line in lines:
            for start, end in zip(line[:-1], line[1:]):
                a, b = vertex(start), vertex(end)
                if a != b:
                    segments.append((a, b))

    if not segments:
        raise DomainFileError(f"{path}: no line segments found")
    vertices = np.array(list(index_of.keys()), dtype=float)
    return LinearNetwork(vertices, np.array(segments, dtype=np.int64), units)


#
## planar window
#

def load_window_json(path: str) -> PlanarWindow:
    return window_from_dict(_read_json(path), base_directory=dirname(path))


def window_from_dict(spec: JsonDict, base_directory: str = "") -> PlanarWindow:
    try:
        x_range = tuple(float(v) for v in spec["x_range"])
        y_range = tuple(float(v) for v in spec["y_range"])
    except (KeyError, TypeError, ValueError) as e:
        raise DomainFileError(f"a planar window needs numeric x_range and y_range ({e})")
    nx, ny = int(spec.get("nx", 1)), int(spec.get("ny", 1))
    units = spec.get("units", "")

    polygon = spec.get("polygon")
    if isinstance(polygon, str):
        polygon = _read_json(join(base_directory, polygon))
    if polygon is not None:
        return PlanarWindow.from_polygon(x_range, y_range, nx, ny, _polygon_rings(polygon), units)

    mask = spec.get("mask")
    if mask is not None:
        mask = np.array(mask, dtype=int).astype(bool)
    return PlanarWindow(x_range, y_range, nx, ny, mask, units)


def window_to_dict(window: PlanarWindow) -> JsonDict:
    spec = {
        "x_range": list(window.x_range),
        "y_range": list(window.y_range),
        "nx": window.nx,
        "ny": window.ny,
        "units": window.units,
    }
    if not window.mask.all():
        spec["mask"] = window.mask.astype(int).tolist()
    return spec


def save_window_json(window: PlanarWindow, path: str):
    with open(path, "w") as f:
        json.dump(window_to_dict(window), f, indent=2, sort_keys=True)


def _polygon_rings(geometry: JsonDict) -> List[List[List[float]]]:
    if geometry.get("type") == "FeatureCollection":
        geometry = geometry["features"][0]["geometry"]
    elif geometry.get("type") == "Feature":
        geometry = geometry["geometry"]
    if geometry.get("type") != "Polygon":
        raise DomainFileError(f"window polygons must be GeoJSON Polygons, received '{geometry.get('type')}'")
    return geometry["coordinates"]


#
## dispatch from run configurations
#

def load_domain(spec: JsonDict, base_directory: str = "") -> Domain:
    """ Builds a domain from the "domain" block of a run or scenario configuration. """
    kind = spec.get("type")
    if kind == DomainType.planar:
        if "window" in spec:
            return load_window_json(join(base_directory, spec["window"]))
        return window_from_dict(spec, base_directory)
    if kind == DomainType.network:
        if "geojson" in spec:
            return load_network_geojson(join(base_directory, spec["geojson"]), spec.get("units", ""))
        if "nodes" in spec and "edges" in spec:
            return load_network_csv(
                join(base_directory, spec["nodes"]), join(base_directory, spec["edges"]), spec.get("units", "")
            )
        raise DomainFileError("a network domain needs either 'geojson' or both 'nodes' and 'edges'")
    raise DomainConstructionError(f"unknown domain type '{kind}', expected one of {DomainType.values()}")


def save_domain(domain: Domain, directory: str, nodes_name: str, edges_name: str, window_name: str) -> JsonDict:
    """ Writes the domain files into directory and returns the matching "domain" block. """
    if isinstance(domain, LinearNetwork):
        save_network_csv(domain, join(directory, nodes_name), join(directory, edges_name))
        return {"type": DomainType.network, "nodes": nodes_name, "edges": edges_name, "units": domain.units}
    save_window_json(domain, join(directory, window_name))
    return {"type": DomainType.planar, "window": window_name}


#
## helpers
#

def _read_csv(path: str, required: Tuple[str, ...]) -> List[Dict[str, str]]:
    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            missing = set(required) - set(reader.fieldnames or [])
            if missing:
                raise DomainFileError(f"{path}: missing columns {sorted(missing)}")
            return [{key: (value or "").strip() for key, value in row.items()} for row in reader]
    except OSError as e:
        raise DomainFileError(f"could not read {path}: {e}")


def _read_json(path: str) -> Union[JsonDict, list]:
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise DomainFileError(f"could not read {path}: {e}")
    except json.JSONDecodeError as e:
        raise DomainFileError(f"{path} is not valid json: {e}")


def _parse_float(value: str, path: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise DomainFileError(f"{path}: '{value}' is not a number")
