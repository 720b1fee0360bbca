# coding=utf-8
#
"""Plain-text scenario files.

One ``key = value`` setting per line, ``#`` starts a comment. ``event``,
``roi`` and ``spatial_gain`` may repeat. See docs/scenario-format.md.
"""
import io
import os
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .scene_model import (DEFAULT_PULSE_AMPLITUDE, HeartRateProfile, IlluminationEvent, IlluminationField,
                          ScenarioSpec, SkinReflectanceField, SpatialGainMap)

logger = logging.getLogger(__name__)

BUILTIN_PREFIX = 'builtin:'
SCALAR_KEYS = {
    'name': str,
    'duration': float,
    'cycle_rate': float,
    'noise_seed': int,
    'base_level': float,
    'face_reflectance': float,
    'background_reflectance': float,
    'hr': float,
    'waveform': str,
    'read_noise_sigma': float,
}
LIST_KEYS = ('grid', 'hr_knots', 'pulse_amplitude', 'spatial_window')
REPEATED_KEYS = ('event', 'roi', 'spatial_gain')


@dataclass(frozen=True, eq=False)
class Scenario:
    """A parsed scenario plus the read noise it asks the sensor for (None keeps the sensor's)."""
    spec: ScenarioSpec
    read_noise_sigma: float = None
    source: str = None


def _span(text, path, number):
    try:
        if '-' in text:
            first, last = (int(v) for v in text.split('-', 1))
        else:
            first = last = int(text)
    except ValueError:
        raise ConfigError('bad index range {!r}'.format(text), path, number)
    if first > last or first < 0:
        raise ConfigError('empty index range {!r}'.format(text), path, number)
    return range(first, last + 1)


def _region(words, path, number):
    """Parse ``rows A-B cols C-D`` into (row range, col range)."""
    if len(words) < 4 or words[0] != 'rows' or words[2] != 'cols':
        raise ConfigError('expected "rows A-B cols C-D", got {!r}'.format(' '.join(words)), path, number)
    return _span(words[1], path, number), _span(words[3], path, number), words[4:]


def _event(words, path, number):
    options = {}
    positional = []
    for word in words:
        if '=' in word:
            key, value = word.split('=', 1)
            if key not in ('period', 'duty'):
                raise ConfigError('unknown event option {}'.format(key), path, number)
            options[key] = value
        else:
            positional.append(word)
    if len(positional) not in (3, 4):
        raise ConfigError('event needs "start kind magnitude [duration]"', path, number)
    try:
        start, kind, magnitude = float(positional[0]), positional[1], float(positional[2])
        duration = float(positional[3]) if len(positional) == 4 else 0.0
        return IlluminationEvent(start, kind, magnitude, duration,
                                 **{key: float(value) for key, value in options.items()})
    except ValueError as e:
        raise ConfigError(str(e), path, number)


def _read_lines(lines, path):
    settings = {key: [] for key in REPEATED_KEYS}
    for number, raw in enumerate(lines, 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError('expected "key = value", got {!r}'.format(line), path, number)
        key, value = (part.strip() for part in line.split('=', 1))
        if key in REPEATED_KEYS:
            settings[key].append((value, number))
        elif key in SCALAR_KEYS or key in LIST_KEYS:
            if key in settings:
                raise ConfigError('duplicate key {}'.format(key), path, number)
            settings[key] = (value, number)
        else:
            raise ConfigError('unknown key {}'.format(key), path, number)
    return settings


def _scalar(settings, key, default, path):
    if key not in settings:
        return default
    value, number = settings[key]
    try:
        return SCALAR_KEYS[key](value)
    except ValueError:
        raise ConfigError('{} expects {}, got {!r}'.format(key, SCALAR_KEYS[key].__name__, value), path, number)


def _floats(settings, key, path):
    value, number = settings[key]
    try:
        return [float(v) for v in value.replace('x', ' ').split()], number
    except ValueError:
        raise ConfigError('{} expects numbers, got {!r}'.format(key, value), path, number)


def parse_scenario(text, source='<string>'):
    """Build a Scenario from scenario-file text.

    Arguments:
        text {str} -- File contents

    Keyword Arguments:
        source {str} -- Name used in error messages (default: {'<string>'})

    Raises:
        ConfigError -- With the offending line for any syntax or range error.

    Returns:
        Scenario -- The spec and its requested read noise
    """
    settings = _read_lines(io.StringIO(text), source)
    for required in ('duration', 'grid', 'base_level'):
        if required not in settings:
            raise ConfigError('missing required key {}'.format(required), source)
    if not settings['roi']:
        raise ConfigError('missing required key roi', source)

    dims, number = _floats(settings, 'grid', source)
    if len(dims) != 2 or any(d != int(d) or d < 1 for d in dims):
        raise ConfigError('grid expects ROWSxCOLS', source, number)
    grid = (int(dims[0]), int(dims[1]))

    roi = []
    for value, number in settings['roi']:
        rows, cols, rest = _region(value.split(), source, number)
        if rest:
            raise ConfigError('trailing words after roi region: {}'.format(' '.join(rest)), source, number)
        roi.extend((r, c) for r in rows for c in cols)

    face = _scalar(settings, 'face_reflectance', 0.5, source)
    background = _scalar(settings, 'background_reflectance', 0.04, source)
    r0 = np.full(grid, background)
    for row, col in roi:
        if row < grid[0] and col < grid[1]:
            r0[row, col] = face

    gain = np.ones(grid)
    for value, number in settings['spatial_gain']:
        rows, cols, rest = _region(value.split(), source, number)
        if len(rest) != 2 or rest[0] != 'gain':
            raise ConfigError('spatial_gain expects "rows A-B cols C-D gain G"', source, number)
        try:
            factor = float(rest[1])
        except ValueError:
            raise ConfigError('bad gain {!r}'.format(rest[1]), source, number)
        for row in rows:
            for col in cols:
                if row >= grid[0] or col >= grid[1]:
                    raise ConfigError('spatial_gain patch ({}, {}) outside grid'.format(row, col), source, number)
                gain[row, col] = factor
    spatial_map = None
    if settings['spatial_gain']:
        window = (0.0, float('inf'))
        if 'spatial_window' in settings:
            values, number = _floats(settings, 'spatial_window', source)
            if len(values) != 2:
                raise ConfigError('spatial_window expects "start end"', source, number)
            window = tuple(values)
        spatial_map = SpatialGainMap(gain, *window)

    if 'hr_knots' in settings:
        values, number = _floats(settings, 'hr_knots', source)
        if not values or len(values) % 2:
            raise ConfigError('hr_knots expects "t hz" pairs', source, number)
        knots = tuple(zip(values[::2], values[1::2]))
    else:
        knots = ((0.0, _scalar(settings, 'hr', 1.2, source)),)
    amplitude = DEFAULT_PULSE_AMPLITUDE
    if 'pulse_amplitude' in settings:
        values, number = _floats(settings, 'pulse_amplitude', source)
        if len(values) != 3:
            raise ConfigError('pulse_amplitude expects three values (R G B)', source, number)
        amplitude = tuple(values)

    events = [_event(value.split(), source, number) for value, number in settings['event']]
    try:
        skin = SkinReflectanceField(r0, amplitude, HeartRateProfile(knots),
                                    _scalar(settings, 'waveform', 'sinusoid', source))
        light = IlluminationField(_scalar(settings, 'base_level', None, source), tuple(events), spatial_map)
        spec = ScenarioSpec(
            duration=_scalar(settings, 'duration', None, source),
            grid=grid,
            illumination=light,
            skin=skin,
            roi=tuple(roi),
            cycle_rate=_scalar(settings, 'cycle_rate', 45.0, source),
            noise_seed=_scalar(settings, 'noise_seed', 0, source),
            name=_scalar(settings, 'name', os.path.splitext(os.path.basename(source))[0], source),
        )
    except DomainError as e:
        raise ConfigError(str(e), source)
    sigma = _scalar(settings, 'read_noise_sigma', None, source)
    if sigma is not None and sigma < 0:
        raise ConfigError('read_noise_sigma must be >= 0', source, settings['read_noise_sigma'][1])
    logger.debug('parsed scenario {} from {}: {} events'.format(spec.name, source, len(events)))
    return Scenario(spec, sigma, source)


def load_scenario(reference):
    """Load a scenario file, or a built-in scenario given as ``builtin:<name>``.

    Raises:
        ConfigError -- If the file cannot be read or parsed.
    """
    if reference.startswith(BUILTIN_PREFIX):
        from .scenarios import builtin_scenario
        return builtin_scenario(reference[len(BUILTIN_PREFIX):])
    try:
        with open(reference, encoding='utf-8') as handle:
            text = handle.read()
    except (IOError, OSError) as e:
        raise ConfigError('cannot read scenario: {}'.format(e), reference)
    return parse_scenario(text, reference)
