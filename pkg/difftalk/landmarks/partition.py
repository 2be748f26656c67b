"""
Region partition of the 68-point landmark set

Standard ordering: jaw 0-16, brows 17-26, nose 27-35, eyes 36-47, mouth 48-67.
The network input is the upper face (brows, nose, eyes and the jaw stubs next
to the ears); the predicted set R is the lower jaw contour plus the mouth.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from difftalk.exceptions import ValidationError

N_POINTS = 68

JAW = tuple(range(0, 17))
BROWS = tuple(range(17, 27))
NOSE = tuple(range(27, 36))
EYES = tuple(range(36, 48))
MOUTH = tuple(range(48, 68))
OUTER_LIP = tuple(range(48, 60))
INNER_LIP = tuple(range(60, 68))

# (upper, lower) inner-lip pairs that face each other vertically
INNER_LIP_PAIRS = ((61, 67), (62, 66), (63, 65))


@dataclass(frozen=True)
class RegionPartition:
    """Disjoint index sets covering 0..67"""
    upper_input: Tuple[int, ...]
    lower_contour: Tuple[int, ...]
    mouth: Tuple[int, ...]

    @property
    def predicted(self) -> Tuple[int, ...]:
        """The point set R of the completion loss (lower contour, then mouth)"""
        return self.lower_contour + self.mouth

    @property
    def contour(self) -> Tuple[int, ...]:
        """Upper input followed by the lower contour (BM-Trans input order)"""
        return self.upper_input + self.lower_contour

    def validate(self) -> "RegionPartition":
        """
        Check disjointness and completeness

        Raises:
            ValidationError: If the sets overlap or miss an index
        """
        sets = (set(self.upper_input), set(self.lower_contour), set(self.mouth))
        sizes = sum(len(s) for s in sets)
        union = set().union(*sets)
        if sizes != len(union):
            raise ValidationError("region partition sets overlap")
        if union != set(range(N_POINTS)):
            missing = sorted(set(range(N_POINTS)) - union)
            raise ValidationError(f"region partition misses indices {missing}")
        return self

    def index_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return np.array(self.upper_input), np.array(self.lower_contour), np.array(self.mouth)


DEFAULT_PARTITION = RegionPartition(
    upper_input=tuple(range(0, 4)) + tuple(range(13, 17)) + tuple(range(17, 48)),
    lower_contour=tuple(range(4, 13)),
    mouth=MOUTH,
).validate()

N_UPPER = len(DEFAULT_PARTITION.upper_input)
N_LOWER = len(DEFAULT_PARTITION.lower_contour)
N_MOUTH = len(DEFAULT_PARTITION.mouth)
N_PREDICTED = N_LOWER + N_MOUTH
