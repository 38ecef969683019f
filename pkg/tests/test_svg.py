import math

from diowave.svg import Plot


def test_render_is_deterministic(tmp_path):
    def make():
        return Plot("decay", "t", "sup", logx=True, logy=True).add("a", [1, 2, 4], [1, 0.7, 0.5]).add(
            "b", [1, 10], [2, 0.2], dashed=True, markers=True
        )

    a, b = make().render(), make().render()
    assert a == b
    assert a.startswith("<svg") and a.rstrip().endswith("</svg>")
    assert "decay" in a and "stroke-dasharray" in a
    make().save(tmp_path / "p.svg")
    assert (tmp_path / "p.svg").read_text() == a


def test_skips_unplottable_points():
    svg = Plot("x", "t", "y", logy=True).add("s", [1, 2, 3], [0.0, math.nan, 1.0]).render()
    assert "<svg" in svg


def test_empty_plot_and_escaping():
    svg = Plot("a < b & c", "x", "y").render()
    assert "a &lt; b &amp; c" in svg
