"""
Minimal SVG scene model.

Charts are assembled from a handful of element types and rendered to
SVG 1.1 text with fixed number formatting, so identical inputs always
produce identical bytes.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape, quoteattr

Point = Tuple[float, float]


def fmt(value: float) -> str:
    text = f"{value:.2f}".rstrip('0').rstrip('.')
    return '0' if text in ('-0', '') else text


def _attributes(attrs: Dict[str, object]) -> str:
    parts = []
    for key, value in attrs.items():
        if value is None:
            continue
        if isinstance(value, float):
            value = fmt(value)
        parts.append(f"{key.rstrip('_').replace('_', '-')}={quoteattr(str(value))}")
    return (' ' + ' '.join(parts)) if parts else ''


@dataclass
class Element:
    attrs: Dict[str, object] = field(default_factory=dict)

    def render(self) -> str:
        raise NotImplementedError


@dataclass
class Line(Element):
    start: Point = (0.0, 0.0)
    end: Point = (0.0, 0.0)

    def render(self) -> str:
        coords = {'x1': fmt(self.start[0]), 'y1': fmt(self.start[1]), 'x2': fmt(self.end[0]), 'y2': fmt(self.end[1])}
        return f"<line{_attributes({**coords, **self.attrs})}/>"


@dataclass
class Rect(Element):
    origin: Point = (0.0, 0.0)
    width: float = 0.0
    height: float = 0.0

    def render(self) -> str:
        box = {'x': fmt(self.origin[0]), 'y': fmt(self.origin[1]), 'width': fmt(self.width), 'height': fmt(self.height)}
        return f"<rect{_attributes({**box, **self.attrs})}/>"


@dataclass
class Circle(Element):
    center: Point = (0.0, 0.0)
    radius: float = 4.0

    def render(self) -> str:
        shape = {'cx': fmt(self.center[0]), 'cy': fmt(self.center[1]), 'r': fmt(self.radius)}
        return f"<circle{_attributes({**shape, **self.attrs})}/>"


@dataclass
class Polyline(Element):
    points: Sequence[Point] = ()

    def render(self) -> str:
        coords = ' '.join(f"{fmt(x)},{fmt(y)}" for x, y in self.points)
        return f"<polyline{_attributes({'points': coords, 'fill': 'none', **self.attrs})}/>"


@dataclass
class Text(Element):
    position: Point = (0.0, 0.0)
    content: str = ''

    def render(self) -> str:
        where = {'x': fmt(self.position[0]), 'y': fmt(self.position[1])}
        return f"<text{_attributes({**where, **self.attrs})}>{escape(self.content)}</text>"


@dataclass
class Group(Element):
    children: List[Element] = field(default_factory=list)

    def add(self, element: Element) -> Element:
        self.children.append(element)
        return element

    def render(self) -> str:
        inner = '\n'.join(child.render() for child in self.children)
        return f"<g{_attributes(self.attrs)}>\n{inner}\n</g>" if inner else f"<g{_attributes(self.attrs)}/>"


class Scene:
    """A fixed-size drawing; render() returns a standalone SVG document."""

    def __init__(self, width: int, height: int, title: Optional[str] = None):
        self.width = width
        self.height = height
        self.title = title
        self.elements: List[Element] = []

    def add(self, element: Element) -> Element:
        self.elements.append(element)
        return element

    def render(self) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
            '<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" "http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">\n'
            f'<svg version="1.1" xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif" font-size="11">\n'
        )
        body = []
        if self.title:
            body.append(f"<title>{escape(self.title)}</title>")
        body += [element.render() for element in self.elements]
        return head + '\n'.join(body) + '\n</svg>\n'
