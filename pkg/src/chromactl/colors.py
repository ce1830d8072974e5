"""Color values, literal parsing, descriptive modifiers, and distance.

Colors live in the unit RGB cube. The subtractive side of the pipeline works
on ink densities, the componentwise complement ``d = 1 - rgb``.
"""

from __future__ import annotations

import colorsys
import enum
import math
import re
from dataclasses import dataclass

from .errors import MalformedLiteral, UnknownColorName

__all__ = [
    "Color",
    "DensityVec",
    "Modifier",
    "NAME_TABLE",
    "parse_color_literal",
    "render_color_literal",
    "rgb_to_density",
    "density_to_rgb",
    "apply_modifier",
    "color_distance",
]


def _check_unit(value: float, label: str) -> None:
    if not (math.isfinite(value) and 0.0 <= value <= 1.0):
        raise ValueError(f"{label} channel {value!r} outside [0, 1]")


@dataclass(frozen=True)
class Color:
    """A point in the unit RGB cube."""

    r: float
    g: float
    b: float

    def __post_init__(self):
        for ch, label in ((self.r, "r"), (self.g, "g"), (self.b, "b")):
            _check_unit(ch, label)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.r, self.g, self.b)


@dataclass(frozen=True)
class DensityVec:
    """Subtractive ink density per channel (cyan, magenta, yellow)."""

    c: float
    m: float
    y: float

    def __post_init__(self):
        for ch, label in ((self.c, "c"), (self.m, "m"), (self.y, "y")):
            _check_unit(ch, label)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.c, self.m, self.y)


class Modifier(enum.Enum):
    """Descriptive adjectives understood by the request parser."""

    BRIGHT = "bright"
    DARK = "dark"
    PALE = "pale"
    DEEP = "deep"


# Fixed 16-entry name table, 8-bit channel values.
_NAME_TABLE_255: dict[str, tuple[int, int, int]] = {
    "red": (255, 0, 0),
    "green": (0, 128, 0),
    "blue": (0, 0, 255),
    "cyan": (0, 255, 255),
    "magenta": (255, 0, 255),
    "yellow": (255, 255, 0),
    "black": (0, 0, 0),
    "white": (255, 255, 255),
    "orange": (255, 165, 0),
    "gray": (128, 128, 128),
    "purple": (128, 0, 128),
    "brown": (165, 42, 42),
    "pink": (255, 192, 203),
    "teal": (0, 128, 128),
    "navy": (0, 0, 128),
    "olive": (128, 128, 0),
}

NAME_TABLE: dict[str, Color] = {
    name: Color(r / 255.0, g / 255.0, b / 255.0)
    for name, (r, g, b) in _NAME_TABLE_255.items()
}

_HEX_RE = re.compile(r"^#([0-9a-fA-F]{6})$")
_RGB_RE = re.compile(r"^rgb\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)$")


def parse_color_literal(text: str) -> Color:
    """Parse ``#RRGGBB``, ``rgb(R,G,B)``, or a name from the shipped table.

    Hex digits are case-insensitive; rgb() channels are integers in 0-255.
    """
    if not text:
        raise MalformedLiteral("empty color literal")
    text = text.strip()
    m = _HEX_RE.match(text)
    if m:
        digits = m.group(1)
        r, g, b = (int(digits[i : i + 2], 16) for i in (0, 2, 4))
        return Color(r / 255.0, g / 255.0, b / 255.0)
    if text.startswith("#"):
        raise MalformedLiteral(f"bad hex literal {text!r}")
    m = _RGB_RE.match(text)
    if m:
        channels = tuple(int(v) for v in m.groups())
        if any(ch > 255 for ch in channels):
            raise MalformedLiteral(f"rgb channel out of 0-255 in {text!r}")
        r, g, b = channels
        return Color(r / 255.0, g / 255.0, b / 255.0)
    if text.startswith("rgb"):
        raise MalformedLiteral(f"bad rgb() literal {text!r}")
    color = NAME_TABLE.get(text.lower())
    if color is None:
        raise UnknownColorName(f"unknown color name {text!r}")
    return color


def render_color_literal(color: Color) -> str:
    """Render as ``#RRGGBB``; inverse of parsing for 8-bit-quantized colors."""
    return "#{:02X}{:02X}{:02X}".format(
        round(color.r * 255), round(color.g * 255), round(color.b * 255)
    )


def rgb_to_density(color: Color) -> DensityVec:
    """Componentwise complement: full ink where the channel is dark."""
    return DensityVec(1.0 - color.r, 1.0 - color.g, 1.0 - color.b)


def density_to_rgb(density: DensityVec) -> Color:
    """Exact inverse of :func:`rgb_to_density`."""
    return Color(1.0 - density.c, 1.0 - density.m, 1.0 - density.y)


_VALUE_SCALE = {Modifier.BRIGHT: 1.25, Modifier.DARK: 0.6}
_SAT_SCALE = {Modifier.PALE: 0.5, Modifier.DEEP: 1.25}


def apply_modifier(color: Color, modifier: Modifier) -> Color:
    """Scale value (bright/dark) or saturation (pale/deep) in HSV space.

    Hue is unchanged; the result is clamped back into the unit cube.
    """
    h, s, v = colorsys.rgb_to_hsv(color.r, color.g, color.b)
    if modifier in _VALUE_SCALE:
        v = min(1.0, v * _VALUE_SCALE[modifier])
    else:
        s = min(1.0, s * _SAT_SCALE[modifier])
    r, g, b = colorsys.hsv_to_rgb(h, s, v)
    clamp = lambda x: min(1.0, max(0.0, x))
    return Color(clamp(r), clamp(g), clamp(b))


def color_distance(a: Color, b: Color) -> float:
    """Euclidean distance in unit RGB; bounded by sqrt(3)."""
    return math.sqrt((a.r - b.r) ** 2 + (a.g - b.g) ** 2 + (a.b - b.b) ** 2)
