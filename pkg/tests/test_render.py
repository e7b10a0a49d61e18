import re
import xml.etree.ElementTree as ET

import pytest

from wormcover.configuration import ConfigParams, objective_f
from wormcover.render import render_file, render_svg

OPT = ConfigParams(0.004341, 0.006483, 0.004341, -0.004341, 0.85711)
NS = "{http://www.w3.org/2000/svg}"


def test_svg_is_well_formed_with_all_parts():
    root = ET.fromstring(render_svg(ConfigParams(0, 0, 0, 0, 0)))
    assert root.tag == NS + "svg"
    assert len(root.findall(NS + "polygon")) == 3  # hull, circle, rectangle
    assert len(root.findall(NS + "line")) == 1


def test_annotation_matches_objective():
    text = render_svg(OPT)
    m = re.search(r"area = ([0-9.]+)", text)
    assert float(m.group(1)) == pytest.approx(objective_f(OPT), abs=1e-6)
    assert m.group(1).startswith("0.1004")


def test_viewbox_covers_bounding_rectangle():
    root = ET.fromstring(render_svg(OPT))
    _, _, w, h = map(float, root.get("viewBox").split())
    assert w >= 0.636 and h >= 0.439


def test_render_is_byte_identical(tmp_path):
    a = render_file(OPT, tmp_path / "a.svg").read_bytes()
    b = render_file(OPT, tmp_path / "b.svg").read_bytes()
    assert a == b


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        render_file(OPT, tmp_path / "no" / "such" / "dir.svg")
