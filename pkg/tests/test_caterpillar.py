import pytest

from hexcat.caterpillar import (
    ENTRY,
    EXIT,
    EmbeddedCaterpillar,
    Fragment,
    PortError,
    SchemaError,
    splice,
    splice_all,
)


def star5(prefix="", with_exit=True):
    """One backbone node with five leaves, optionally an open exit slot."""
    b = f"{prefix}b"
    leaves = [f"{prefix}l{i}" for i in range(5)]
    rot = {b: ([EXIT] if with_exit else []) + leaves}
    for l in leaves:
        rot[l] = [b]
    return Fragment([b], {b: leaves}, rot)


def test_star_is_valid():
    assert star5().validate().ok
    assert star5(with_exit=False).validate().ok


def test_degree_violation():
    b = "b"
    leaves = [f"l{i}" for i in range(7)]
    rot = {b: leaves}
    rot.update({l: [b] for l in leaves})
    cat = EmbeddedCaterpillar([b], {b: leaves}, rot)
    kinds = {v.kind for v in cat.validate().violations}
    assert "DegreeViolation" in kinds


def test_rotation_omitting_neighbor():
    cat = EmbeddedCaterpillar(
        ["a", "b"],
        {"a": ["x"]},
        {"a": ["b"], "b": ["a"], "x": ["a"]},  # a's rotation omits leaf x
    )
    kinds = {v.kind for v in cat.validate().violations}
    assert "RotationViolation" in kinds


def test_backbone_must_be_path():
    # "backbone" of 3 nodes where the middle is not adjacent to the last
    cat = EmbeddedCaterpillar(
        ["a", "b", "c"],
        {},
        {"a": ["b", "c"], "b": ["a"], "c": ["a"]},
    )
    assert not cat.validate().ok


def test_splice_smallest():
    a = star5("a/")
    b = Fragment(["b/b"], {}, {"b/b": [ENTRY]})
    joined = splice(a, b)
    assert joined.backbone == ["a/b", "b/b"]
    assert joined.validate().ok
    assert joined.node_count() == 7
    assert "b/b" in joined.rotation["a/b"]
    assert joined.rotation["b/b"] == ["a/b"]


def test_splice_length_additivity():
    def chain(prefix, k):
        bb = [f"{prefix}{i}" for i in range(k)]
        rot = {}
        for i, n in enumerate(bb):
            r = []
            if i == 0:
                r.append(ENTRY)
            else:
                r.append(bb[i - 1])
            if i == k - 1:
                r.append(EXIT)
            else:
                r.append(bb[i + 1])
            rot[n] = r
        return Fragment(bb, {}, rot)

    p, q = 3, 4
    joined = splice(chain("p", p), chain("q", q))
    assert len(joined.backbone) == p + q


def test_splice_requires_ports():
    terminal = star5("t/", with_exit=False)
    b = Fragment(["x"], {}, {"x": [ENTRY]})
    with pytest.raises(PortError):
        splice(terminal, b)
    with pytest.raises(PortError):
        splice(star5("a/"), star5("b/"))  # b has no entry


def test_splice_associativity_of_backbone():
    def frag(p):
        return Fragment([f"{p}0"], {}, {f"{p}0": [ENTRY, EXIT]})

    f1 = splice_all([frag("a"), frag("b"), frag("c")])
    f2 = splice(frag("a"), splice(frag("b"), frag("c")))
    assert f1.backbone == f2.backbone
    assert f1.to_json_dict() == f2.to_json_dict()


def test_serialize_round_trip():
    cat = splice(star5("a/"), Fragment(["b/b"], {}, {"b/b": [ENTRY]}))
    doc = cat.dumps()
    back = EmbeddedCaterpillar.loads(doc)
    assert back.structurally_equal(cat)


def test_deserialize_duplicate_node():
    with pytest.raises(SchemaError):
        EmbeddedCaterpillar.loads(
            '{"backbone": ["a", "a"], "leaves": {}, "rotation": {"a": []}}'
        )


def test_deserialize_malformed():
    with pytest.raises(SchemaError):
        EmbeddedCaterpillar.loads("not json at all {")
    with pytest.raises(SchemaError):
        EmbeddedCaterpillar.loads('{"backbone": ["a"]}')
    with pytest.raises(SchemaError):
        EmbeddedCaterpillar.loads(
            '{"backbone": ["a"], "leaves": {}, "rotation": {"a": ["ghost"]}}'
        )


def test_renamed_namespacing():
    frag = star5().renamed("var3/")
    assert frag.backbone == ["var3/b"]
    assert frag.entry_node is None
    assert EXIT in frag.rotation["var3/b"]
    assert frag.validate().ok
