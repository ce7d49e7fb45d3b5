import math

import pytest

from hexcat.hexlattice import (
    DIRS,
    BadLatticePoint,
    Box,
    Pose,
    Pt,
    bounding_box,
    ccw_compare,
    check_parity,
    neighbors,
    rotate60,
    squared_distance,
    to_cartesian,
    transform,
    transform_pose,
)


def test_to_cartesian_examples():
    assert to_cartesian(Pt(0, 0)) == (0.0, 0.0)
    assert to_cartesian(Pt(2, 0)) == (2.0, 0.0)
    x, y = to_cartesian(Pt(1, 1))
    assert x == 1.0 and abs(y - math.sqrt(3)) < 1e-12


def test_squared_distance_examples():
    assert squared_distance(Pt(0, 0), Pt(2, 0)) == 4
    assert squared_distance(Pt(0, 0), Pt(1, 1)) == 4
    assert squared_distance(Pt(0, 0), Pt(3, 1)) == 12


def test_squared_distance_matches_cartesian():
    pts = [Pt(u, v) for u in range(-4, 5) for v in range(-4, 5) if (u - v) % 2 == 0]
    for p in pts:
        for q in pts:
            ex = squared_distance(p, q)
            px, py = to_cartesian(p)
            qx, qy = to_cartesian(q)
            assert abs(ex - ((px - qx) ** 2 + (py - qy) ** 2)) < 1e-9


def test_parity():
    check_parity((2, 0))
    with pytest.raises(BadLatticePoint):
        check_parity((1, 0))


def test_dirs_structure():
    for k, d in enumerate(DIRS):
        assert DIRS[(k + 3) % 6] == -d
        assert rotate60(d) == DIRS[(k + 1) % 6]
        assert squared_distance(Pt(0, 0), d) == 4


def test_rotate60_examples():
    assert rotate60(Pt(2, 0)) == Pt(1, 1)
    assert rotate60(Pt(1, 1)) == Pt(-1, 1)
    p = Pt(5, 3)
    assert rotate60(p, Pt(1, 1), 6) == p


def test_rotation_is_isometry():
    pts = [Pt(u, v) for u in range(-3, 4) for v in range(-3, 4) if (u - v) % 2 == 0]
    center = Pt(2, 0)
    for p in pts:
        for q in pts:
            for k in range(6):
                assert squared_distance(rotate60(p, center, k), rotate60(q, center, k)) == \
                    squared_distance(p, q)


def test_rotation_preserves_parity():
    for p in [Pt(2, 0), Pt(1, 1), Pt(-3, 5), Pt(4, -2)]:
        for k in range(6):
            check_parity(rotate60(p, Pt(0, 0), k))
            check_parity(rotate60(p, Pt(1, -1), k))


def test_neighbors_examples():
    assert neighbors(Pt(0, 0)) == [Pt(2, 0), Pt(1, 1), Pt(-1, 1), Pt(-2, 0), Pt(-1, -1), Pt(1, -1)]
    for q in neighbors(Pt(3, 1)):
        assert squared_distance(Pt(3, 1), q) == 4


def test_neighbors_are_exactly_the_touching_cells():
    # scan the 5x5 offset box around a point for squared distance 4
    p = Pt(0, 0)
    touching = {
        Pt(du, dv)
        for du in range(-2, 3)
        for dv in range(-2, 3)
        if (du - dv) % 2 == 0 and du * du + 3 * dv * dv == 4
    }
    assert touching == set(neighbors(p))


def test_two_step_shell():
    # brute force: the second shell has 12 distinct new points plus p itself
    p = Pt(0, 0)
    shell1 = set(neighbors(p))
    shell2 = set()
    for q in shell1:
        shell2.update(neighbors(q))
    assert p in shell2
    assert len(shell2 - shell1 - {p}) == 12


def test_pose_transform_composition():
    pose = Pose(Pt(4, 2), 2)
    local = Pose(Pt(2, 0), 1)
    moved = transform_pose(local, pose)
    assert moved.at == transform(Pt(2, 0), pose)
    assert moved.facing == 3
    # rotation equivariance: transform(rotate(p)) under rotated pose
    p = Pt(3, 1)
    rotated_pose = Pose(rotate60(pose.at), (pose.facing + 1) % 6)
    assert transform(p, rotated_pose) == rotate60(transform(p, pose))


def test_box():
    box = bounding_box([Pt(0, 0), Pt(4, 2)])
    assert box == Box(0, 0, 4, 2)
    assert box.contains(Pt(2, 0)) and not box.contains(Pt(6, 0))
    pts = list(box.points())
    assert Pt(1, 1) in pts and Pt(1, 0) not in pts
    assert box.expand(2) == Box(-2, -2, 6, 4)


def test_ccw_compare_total_order():
    dirs = [(2, 0), (1, 1), (-1, 1), (-2, 0), (-1, -1), (1, -1)]
    ordered = sorted(dirs, key=lambda d: _key(d))
    assert ordered == dirs


def _key(d):
    import functools

    from hexcat.hexlattice import ccw_compare

    class K:
        def __init__(self, d):
            self.d = d

        def __lt__(self, other):
            return ccw_compare(self.d, other.d) < 0

    return K(d)


def test_ccw_compare_matches_atan2():
    import math

    cands = [(u, v) for u in range(-3, 4) for v in range(-3, 4) if (u, v) != (0, 0)]
    ang = lambda d: math.atan2(d[1] * math.sqrt(3), d[0]) % (2 * math.pi)
    for a in cands:
        for b in cands:
            got = ccw_compare(a, b)
            if got == 0:
                # exactly parallel; atan2 may differ by an ulp
                assert a[0] * b[1] == a[1] * b[0]
                assert abs(ang(a) - ang(b)) < 1e-12
            else:
                want = (ang(a) > ang(b)) - (ang(a) < ang(b))
                assert got == want, (a, b)
