import xml.etree.ElementTree as ET

import pytest

from mazecap.svgplot import LogLogPlot


def test_fit_and_render():
    p = LogLogPlot("caps", "1/(2m)", "capacity")
    s = p.add([0.1, 0.05, 0.025], [1.0, 4.0, 16.0], "data")
    assert s.fit[0] == pytest.approx(-2.0)
    svg = p.render()
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert svg.count("<circle") == 3 + 1  # markers plus the legend swatch
    assert "slope -2.000" in svg
    assert p.render() == svg


def test_rejects_nonpositive():
    with pytest.raises(ValueError):
        LogLogPlot().add([1.0, 0.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        LogLogPlot().render()
