# coding=utf-8
#
"""Built-in driving scenarios, written in the scenario-file format.

Face patches reflect 0.5 and the background 0.04, so full-frame metering is
dominated by a dark cabin. With unit responsivity a face patch collects
``base_level / 2`` codes per ms.
"""
import logging

from .errors import ConfigError
from .scenario_file import BUILTIN_PREFIX, parse_scenario

logger = logging.getLogger(__name__)

_COMMON = """
grid = 8x8
face_reflectance = 0.5
background_reflectance = 0.04
hr = 1.2
"""

BUILTIN_SCENARIOS = {
    # roadside trees: square-wave shadows at 2 Hz
    'shadow-flicker': """
name = shadow-flicker
duration = 60
base_level = 30
roi = rows 2-5 cols 3-5
event = 10 shadow-flicker 0.3 40 period=0.5 duty=0.5
read_noise_sigma = 1
""",
    # low sun sweeping across the windshield
    'extreme-glare': """
name = extreme-glare
duration = 60
base_level = 20
roi = rows 2-5 cols 3-5
event = 15 ramp 2.5 1
event = 30 ramp 0.4 1
event = 40 ramp 2.5 1
event = 52 ramp 0.4 1
read_noise_sigma = 1
""",
    # night driving: the triplet slot cannot collect enough light
    'low-light-ceiling': """
name = low-light-ceiling
duration = 60
base_level = 1
roi = rows 2-5 cols 3-5
read_noise_sigma = 2
""",
    # sun visor shades the forehead row while the chin sits in full sun
    'visor-gradient': """
name = visor-gradient
duration = 60
base_level = 50
roi = rows 2-4 cols 2-5
spatial_gain = rows 2-2 cols 0-7 gain 0.03
read_noise_sigma = 2
""",
    'commute': """
name = commute
duration = 120
base_level = 30
roi = rows 2-5 cols 3-5
event = 40 step 3
event = 80 step 0.25
event = 20 shadow-flicker 0.3 10
event = 90 shadow-flicker 0.3 10
read_noise_sigma = 1
""",
    # sunny drive through a long dark tunnel
    'tunnel': """
name = tunnel
duration = 120
base_level = 40
roi = rows 2-5 cols 3-5
event = 40 ramp 0.08 2
event = 80 ramp 12.5 2
read_noise_sigma = 2
""",
}

# the four case studies shipped with the demo
CASE_SCENARIOS = ('shadow-flicker', 'extreme-glare', 'low-light-ceiling', 'visor-gradient')


def builtin_scenario(name):
    """Parse one of BUILTIN_SCENARIOS.

    Raises:
        ConfigError -- If no built-in scenario has that name.
    """
    if name not in BUILTIN_SCENARIOS:
        raise ConfigError('unknown built-in scenario {}, expected one of {}'.format(name, sorted(BUILTIN_SCENARIOS)))
    return parse_scenario(_COMMON + BUILTIN_SCENARIOS[name], BUILTIN_PREFIX + name)
