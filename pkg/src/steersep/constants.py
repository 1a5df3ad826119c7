"""Reference values for two-qubit separability, used for comparison in reports.

Only the first few are checked by this package; the ball volumes are kept
as documentation.
"""
import math
from fractions import Fraction

_R2 = math.sqrt(2.0)
_R3 = math.sqrt(3.0)
_ACOS13 = math.acos(1.0 / 3.0)

#: Hilbert-Schmidt two-qubit separability probability.
HS_SEPARABILITY = Fraction(8, 33)
#: Conjectured Bures two-qubit separability probability.
BURES_SEPARABILITY = Fraction(25, 341)

#: Hilbert-Schmidt probability that a two-qubit state is absolutely separable.
HS_ABS_SEPARABILITY = (
    29902415923 / 497664
    - 50274109 / (512 * _R2)
    - 3072529845 * math.pi / (32768 * _R2)
    + 1024176615 * _ACOS13 / (4096 * _R2)
)

#: Flat volume of absolutely separable ordered spectra, in (l1, l2, l3) coordinates.
ORDERED_ABS_SEP_VOLUME = (8 - 6 * _R2 - 9 * _R2 * math.pi + 24 * _R2 * _ACOS13) / 576
#: Volume of the ordered chamber l1 >= l2 >= l3 >= l4 in the same coordinates.
ORDERED_CHAMBER_VOLUME = 1.0 / 144.0

# Balls inside / around the absolutely separable set (documentation only).
HS_MAX_INNER_BALL = 35 * math.pi / (23328 * _R3)
HS_MIN_OUTER_BALL = 35 * math.sqrt((2692167889921345 - 919847607929856 * math.sqrt(6)) / 3) * math.pi / 27518828544
ORDERED_MAX_INNER_BALL = math.pi / (864 * _R3)
ORDERED_MIN_OUTER_BALL = (14 - 3 * math.sqrt(6)) * math.pi / (3456 * _R3)
