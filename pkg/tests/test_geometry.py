import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from casimir_gratings.errors import ContactError, GeometryError, ParseError
from casimir_gratings.geometry import (
    GratingSpec,
    PolygonUnitCell,
    Scene,
    Stage,
    classify_stage,
    gap_profiles,
    load_scenes,
    offset_boundary,
    offset_scene,
    parse_geometry,
    parse_scenes,
    rect_unit_cell,
    serialize_scene,
    serialize_scenes,
    square_blocks_scene,
)

SPEC = GratingSpec.paper()
S, H, W, P = SPEC.initial_tip_gap, SPEC.finger_length, SPEC.finger_width, SPEC.period


def square(side=1.0, x=0.0, y=0.0):
    return np.array([(x, y), (x + side, y), (x + side, y + side), (x, y + side)])


# --- specs and unit cells ------------------------------------------------


def test_preset_gap():
    assert SPEC.gap == pytest.approx(92e-9, rel=1e-9, abs=0)
    scene = rect_unit_cell(SPEC)
    assert scene.spec.gap == pytest.approx(92e-9, rel=1e-9, abs=0)


def test_tiny_gap_allowed():
    eps = 1e-12
    spec = GratingSpec(2e-6, 1e-6 - eps, 1.5e-6, 2.58e-6, 430e-9)
    assert spec.gap == pytest.approx(eps, rel=1e-3, abs=0)
    rect_unit_cell(spec)


@pytest.mark.parametrize("w", [1e-6, 1.2e-6])
def test_finger_too_wide(w):
    with pytest.raises(GeometryError):
        GratingSpec(2e-6, w, 1.5e-6, 2.58e-6, 430e-9)


def test_with_gap():
    assert SPEC.with_gap(150e-9).gap == pytest.approx(150e-9, rel=1e-12, abs=0)


def test_clockwise_reoriented():
    cell = PolygonUnitCell(square()[::-1], 10.0, "fixed")
    assert cell.area > 0


def test_self_intersecting_rejected():
    bow = np.array([(0, 0), (1, 1), (1, 0), (0, 1)], dtype=float)
    with pytest.raises(GeometryError):
        PolygonUnitCell(bow, 10.0)


def test_polygon_wider_than_period_rejected():
    with pytest.raises(GeometryError):
        PolygonUnitCell(square(2.0), 1.0)


def test_scene_contact_rejected():
    f = PolygonUnitCell(square(), 10.0, "fixed")
    m = PolygonUnitCell(square(x=0.5, y=0.5), 10.0, "movable")
    with pytest.raises(ContactError):
        Scene(f, m)


def test_contact_displacement_of_ideal_scene():
    scene = rect_unit_cell(SPEC)
    with pytest.raises(ContactError):
        scene.at(SPEC.contact_displacement)
    scene.at(SPEC.contact_displacement - 1e-9)


def test_seams_detected():
    scene = rect_unit_cell(SPEC)
    assert scene.fixed.spans_period and scene.movable.spans_period
    assert scene.fixed.seam_mask().sum() == 2
    assert scene.movable.seam_mask().sum() == 2


# --- file format ----------------------------------------------------------


def test_roundtrip_bit_exact():
    scene = rect_unit_cell(SPEC)
    text = serialize_scene(scene)
    again = parse_geometry(text)
    assert np.array_equal(again.fixed.vertices, scene.fixed.vertices)
    assert np.array_equal(again.movable.vertices, scene.movable.vertices)
    assert serialize_scene(again) == text


@given(st.lists(st.floats(-1e-7, 1e-7, allow_nan=False), min_size=8, max_size=8))
@settings(max_examples=50, deadline=None)
def test_roundtrip_arbitrary_floats(jitter):
    f = square(1e-6) + np.array(jitter).reshape(4, 2) * 0.1
    m = square(1e-6, x=2e-6) + np.array(jitter[::-1]).reshape(4, 2) * 0.1
    scene = Scene(PolygonUnitCell(f, 1e-5, "fixed"), PolygonUnitCell(m, 1e-5, "movable"))
    again = parse_geometry(serialize_scene(scene))
    assert np.array_equal(again.fixed.vertices, scene.fixed.vertices)
    assert np.array_equal(again.movable.vertices, scene.movable.vertices)


GOOD = """# two squares
period 10
poly fixed
v 0 0
v 1 0
v 1 1
v 0 1
end
poly movable
v 3 0
v 4 0
v 4 1
v 3 1
end
"""


def test_parse_good_file():
    scene = parse_geometry(GOOD)
    assert scene.period == 10.0


@pytest.mark.parametrize(
    "text, line",
    [
        (GOOD.replace("v 1 0\n", "v 1 zero\n", 1), 5),
        (GOOD.replace("period 10", "periodic 10"), 2),
        (GOOD.replace("v 4 1\n", "v 4\n"), 12),
        (GOOD.replace("poly movable", "poly mobile"), 9),
        (GOOD.replace("end\npoly movable", "poly movable"), 8),
        (GOOD.replace("v 3 1\nend\n", "v 3 1\n"), 13),
        (GOOD.replace("v 0 1\n", "v 0 1\nfoo 1 2\n"), 8),
        (GOOD.replace("v 1 1\n", "v 1 inf\n"), 6),
    ],
)
def test_parse_errors_name_line(text, line):
    with pytest.raises(ParseError) as info:
        parse_geometry(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_parse_self_intersection_names_block():
    text = GOOD.replace("v 1 0\nv 1 1\n", "v 1 1\nv 1 0\n", 1)
    with pytest.raises(ParseError) as info:
        parse_geometry(text)
    assert info.value.line == 3


def test_parse_overlap_at_zero_is_error():
    text = GOOD.replace("v 3 0\nv 4 0\nv 4 1\nv 3 1", "v 0.5 0.5\nv 4 0.5\nv 4 1.5\nv 0.5 1.5")
    with pytest.raises(ContactError):
        parse_geometry(text)


def test_parse_multi_unit_rejected_by_single_parser():
    text = serialize_scenes([parse_geometry(GOOD)] * 2)
    assert len(parse_scenes(text)) == 2
    with pytest.raises(ParseError):
        parse_geometry(text)


def test_digitized_fixture_has_six_units(digitized_path):
    scenes = load_scenes(digitized_path)
    assert len(scenes) == 6
    for sc in scenes:
        assert sc.fixed.spans_period and sc.movable.spans_period
        assert sc.fixed.seam_mask().sum() == 2
        assert len(sc.fixed.vertices) > 100


# --- offsets --------------------------------------------------------------


def test_offset_zero_is_identity():
    cell = rect_unit_cell(SPEC).fixed
    assert np.allclose(offset_boundary(cell, 0.0).vertices, cell.vertices, atol=0, rtol=0)


def test_offset_square_exact():
    cell = PolygonUnitCell(square(1.0), 10.0)
    grown = offset_boundary(cell, 0.1)
    assert grown.area == pytest.approx(1.44, rel=1e-12, abs=0)
    assert np.ptp(grown.vertices[:, 0]) == pytest.approx(1.2, rel=1e-12, abs=0)


def test_offset_roundtrip_area():
    cell = rect_unit_cell(SPEC).fixed
    back = offset_boundary(offset_boundary(cell, 2.5e-9), -2.5e-9)
    assert back.area == pytest.approx(cell.area, rel=1e-6, abs=0)


def test_offset_keeps_seams():
    cell = rect_unit_cell(SPEC).fixed
    grown = offset_boundary(cell, 5e-9)
    assert grown.spans_period
    assert grown.vertices[:, 0].min() == 0.0 and grown.vertices[:, 0].max() == P


def test_offset_ideal_gap_shrinks():
    scene = rect_unit_cell(SPEC)
    grown = offset_scene(scene, 2.5e-9)
    gp = gap_profiles(grown, d=S + 500e-9)
    assert np.allclose(gp.lateral_gap, SPEC.gap - 5e-9, rtol=1e-9)


def test_offset_collapse_is_error():
    cell = PolygonUnitCell(square(1.0), 10.0)
    with pytest.raises(GeometryError):
        offset_boundary(cell, -0.6)


def test_offset_digitized_band(digitized_path):
    scene = load_scenes(digitized_path)[0]
    a, b = scene.fixed.edges()
    # seam edges stay put, so only the physical boundary moves
    perim = np.sum(np.linalg.norm(b - a, axis=1)[~scene.fixed.seam_mask()])
    for delta in (2.5e-9, -2.5e-9):
        cell = offset_boundary(scene.fixed, delta)
        assert cell.area - scene.fixed.area == pytest.approx(delta * perim, rel=0.05, abs=0)
        offset_scene(scene, delta)


# --- stages ---------------------------------------------------------------


@pytest.mark.parametrize("d, stage", [(0.0, Stage.I), (0.43e-6, Stage.II), (1.0e-6, Stage.III), (1.6e-6, Stage.IV)])
def test_classify_examples(d, stage):
    assert classify_stage(SPEC, d) == stage


@given(st.lists(st.floats(0, 1.9e-6), min_size=2, max_size=20))
def test_classify_monotone(ds):
    idx = [classify_stage(SPEC, d).index for d in sorted(ds)]
    assert idx == sorted(idx)


def test_classify_negative():
    with pytest.raises(GeometryError):
        classify_stage(SPEC, -1e-9)


# --- gap profiles ---------------------------------------------------------


def test_profiles_ideal_at_zero():
    gp = gap_profiles(rect_unit_cell(SPEC), d=0.0)
    assert gp.lateral == []
    vals = np.unique(np.round(gp.vertical_gap, 15))
    assert np.allclose(vals, [S + H, S + 2 * H])
    assert gp.vertical_weight.sum() == pytest.approx(P, rel=1e-12, abs=0)
    # tips cover 2w of the period at gap s + h
    tips = np.isclose(gp.vertical_gap, S + H)
    assert gp.vertical_weight[tips].sum() == pytest.approx(2 * W, rel=1e-12, abs=0)


def test_profiles_ideal_overlap():
    d = S + 500e-9
    gp = gap_profiles(rect_unit_cell(SPEC), d=d)
    assert np.allclose(gp.lateral_gap, SPEC.gap, rtol=1e-12)
    assert gp.lateral_weight.sum() == pytest.approx(2 * 500e-9, rel=1e-9, abs=0)
    ys = gp.lateral_y
    assert ys.min() > S and ys.max() < d
    assert np.allclose(np.unique(np.round(gp.vertical_gap, 15)), [S + H - d, S + 2 * H - d])


def test_profiles_translation_invariant():
    scene = rect_unit_cell(SPEC)
    shift = np.array([0.3e-6, -0.7e-6])
    moved = Scene(scene.fixed.translated(*shift), scene.movable.translated(*shift))
    a = gap_profiles(scene, d=1e-6)
    b = gap_profiles(moved, d=1e-6)
    assert np.allclose(np.sort(a.vertical_gap), np.sort(b.vertical_gap), rtol=1e-9)
    assert np.allclose(np.sort(a.lateral_gap), np.sort(b.lateral_gap), rtol=1e-9)
    assert a.vertical_weight.sum() == pytest.approx(b.vertical_weight.sum(), rel=1e-12, abs=0)
    assert a.lateral_weight.sum() == pytest.approx(b.lateral_weight.sum(), rel=1e-9, abs=0)


def test_profiles_refinement(digitized_path):
    scene = load_scenes(digitized_path)[0]
    for d in (0.2e-6, 1.0e-6):
        a = gap_profiles(scene, 4, d=d)
        b = gap_profiles(scene, 8, d=d)
        # integrals of 1/gap^3 (the PFA weight) agree to the discretisation bound
        ia = np.sum(a.lateral_weight / a.lateral_gap**3) + np.sum(a.vertical_weight / a.vertical_gap**3)
        ib = np.sum(b.lateral_weight / b.lateral_gap**3) + np.sum(b.vertical_weight / b.vertical_gap**3)
        assert ia == pytest.approx(ib, rel=1e-3, abs=0)


def test_profiles_positive_and_contact(digitized_path):
    scene = load_scenes(digitized_path)[0]
    gp = gap_profiles(scene, d=1.2e-6)
    assert np.all(gp.vertical_gap > 0) and np.all(gp.lateral_gap > 0)
    assert gp.lateral_weight.sum() > 0
    with pytest.raises(ContactError):
        gap_profiles(rect_unit_cell(SPEC), d=SPEC.contact_displacement + 1e-8)


def test_square_blocks_scene_layout():
    sc = square_blocks_scene(1e-6, 100e-9, 50e-9)
    gp = gap_profiles(sc, d=0.5e-6)
    near = gp.lateral_gap < 1e-6  # the other hits are the next periodic image, 98 um away
    assert np.allclose(gp.lateral_gap[near], 100e-9)
    assert gp.lateral_weight[near].sum() == pytest.approx(0.45e-6, rel=1e-9, abs=0)
    assert np.all(gp.lateral_gap[~near] > 90e-6)


def test_swapped_keeps_orientation_and_twice_is_identity():
    sc = rect_unit_cell(SPEC).at(0.7e-6)
    w = sc.swapped()
    assert w.fixed.area == pytest.approx(sc.movable.area, rel=1e-12, abs=0)
    assert w.fixed.polygon().centroid.y > w.movable.polygon().centroid.y
    back = w.swapped()
    assert np.allclose(back.fixed.vertices, sc.fixed.vertices, rtol=0, atol=1e-21)
    assert np.allclose(back.movable.vertices + back.movable_shift(), sc.movable.vertices + sc.movable_shift(),
                       rtol=0, atol=1e-21)
