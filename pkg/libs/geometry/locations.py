from typing import Iterable, Optional, Sequence, Union

import numpy as np

from libs.geometry.exceptions import LocationsMismatchError
from libs.internal_types import FloatArray, IntArray


class DomainLocation:
    """ A single location on a domain.  Planar locations only carry (x, y); network locations
    carry the segment id and the offset along the segment as well as their embedded (x, y). """

    __slots__ = ("x", "y", "segment", "offset")

    def __init__(self, x: float, y: float, segment: Optional[int] = None, offset: Optional[float] = None):
        self.x = float(x)
        self.y = float(y)
        self.segment = None if segment is None else int(segment)
        self.offset = None if offset is None else float(offset)

    @property
    def on_network(self) -> bool:
        return self.segment is not None

    def __eq__(self, other) -> bool:
        if not isinstance(other, DomainLocation):
            return NotImplemented
        return (self.x, self.y, self.segment, self.offset) == \
               (other.x, other.y, other.segment, other.offset)

    def __hash__(self):
        return hash((self.x, self.y, self.segment, self.offset))

    def __repr__(self):
        if self.on_network:
            return f"DomainLocation(segment={self.segment}, offset={self.offset}, x={self.x}, y={self.y})"
        return f"DomainLocation(x={self.x}, y={self.y})"


class Locations:
    """ Columnar container of many locations on one domain.  coords is always populated (network
    locations are embedded in the plane), segments and offsets are populated only on networks. """

    def __init__(
        self, coords: FloatArray, segments: Optional[IntArray] = None, offsets: Optional[FloatArray] = None
    ):
        coords = np.asarray(coords, dtype=float).reshape(-1, 2)
        if (segments is None) != (offsets is None):
            raise LocationsMismatchError("segments and offsets must be provided together")
        if segments is not None:
            segments = np.asarray(segments, dtype=np.int64).reshape(-1)
            offsets = np.asarray(offsets, dtype=float).reshape(-1)
            if not len(segments) == len(offsets) == len(coords):
                raise LocationsMismatchError("coords, segments and offsets must have the same length")
        self.coords: FloatArray = coords
        self.segments: Optional[IntArray] = segments
        self.offsets: Optional[FloatArray] = offsets

    @property
    def on_network(self) -> bool:
        return self.segments is not None

    def __len__(self) -> int:
        return len(self.coords)

    def __getitem__(self, index: Union[int, slice, Sequence[int], np.ndarray]):
        if isinstance(index, (int, np.integer)):
            x, y = self.coords[index]
            if self.on_network:
                return DomainLocation(x, y, self.segments[index], self.offsets[index])
            return DomainLocation(x, y)
        if self.on_network:
            return Locations(self.coords[index], self.segments[index], self.offsets[index])
        return Locations(self.coords[index])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @classmethod
    def empty(cls, on_network: bool) -> "Locations":
        if on_network:
            return cls(np.zeros((0, 2)), np.zeros(0, dtype=np.int64), np.zeros(0))
        return cls(np.zeros((0, 2)))

    @classmethod
    def from_domain_locations(cls, locations: Iterable[DomainLocation], on_network: bool = None) -> "Locations":
        locations = list(locations)
        if on_network is None:
            on_network = bool(locations) and locations[0].on_network
        if not locations:
            return cls.empty(on_network)
        coords = np.array([(loc.x, loc.y) for loc in locations], dtype=float)
        if on_network:
            return cls(
                coords,
                np.array([loc.segment for loc in locations], dtype=np.int64),
                np.array([loc.offset for loc in locations], dtype=float),
            )
        return cls(coords)

    @classmethod
    def concatenate(cls, first: "Locations", second: "Locations") -> "Locations":
        if first.on_network != second.on_network:
            raise LocationsMismatchError("cannot concatenate planar and network locations")
        coords = np.vstack([first.coords, second.coords])
        if first.on_network:
            return cls(
                coords,
                np.concatenate([first.segments, second.segments]),
                np.concatenate([first.offsets, second.offsets]),
            )
        return cls(coords)

    def __repr__(self):
        kind = "network" if self.on_network else "planar"
        return f"Locations({len(self)} {kind} points)"
