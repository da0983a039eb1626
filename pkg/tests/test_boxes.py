import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from prlab import boxes
from prlab.boxes import Extremality


def test_pr_box_table():
    b = boxes.pr_box()
    assert b.p(1, 1) == 0.5 and b.p(1, -1) == 0
    assert b.p(1, -1, "A'", "B'") == 0.5 and b.p(1, 1, "A'", "B'") == 0
    assert b.is_valid()
    assert boxes.is_nonsignaling(b)
    assert boxes.correlations(b) == {"E(A,B)": 1, "E(A,B')": 1, "E(A',B)": 1, "E(A',B')": -1}


def test_chsh_reference_values():
    assert boxes.chsh(boxes.pr_box()) == 4
    assert boxes.chsh(boxes.uniform_box()) == 0
    assert boxes.chsh(boxes.tsirelson_box()) == pytest.approx(2 * np.sqrt(2))
    assert boxes.chsh(boxes.pr_box().relabeled(alice=True)) == -4


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=4, max_size=4))
def test_local_product_boxes_obey_chsh(p):
    b = boxes.product_box(np.array(p[:2]), np.array(p[2:]))
    assert boxes.is_nonsignaling(b)
    assert abs(boxes.chsh(b)) <= 2 + 1e-12


def test_local_deterministic_bound():
    # the 16 deterministic strategies give |CHSH| = 2 at most
    best = 0
    for a in itertools.product([0.0, 1.0], repeat=2):
        for b in itertools.product([0.0, 1.0], repeat=2):
            best = max(best, abs(boxes.chsh(boxes.product_box(np.array(a), np.array(b)))))
    assert best == 2


def test_classification():
    v = boxes.classify_extremal(boxes.pr_box())
    assert v.kind is Extremality.PR and v.residual == 0
    anti = boxes.classify_extremal(boxes.pr_box().relabeled(bob=True))
    assert anti.kind is Extremality.ANTI_PR
    assert boxes.classify_extremal(boxes.tsirelson_box()).kind is Extremality.NOT_MAXIMAL
    # relabeling both sides gives back the PR table
    assert boxes.pr_box().relabeled(alice=True, bob=True).max_difference(boxes.pr_box()) == 0


def test_signaling_box_is_rejected():
    p = np.zeros((2, 2, 2, 2))
    # Bob's outcome copies Alice's setting
    for c, d in itertools.product(range(2), repeat=2):
        p[c, d, 0, c] = 1.0
    b = boxes.NonLocalBox(p)
    assert b.is_valid()
    assert boxes.signaling_residuals(b)["bob"] == 1.0
    with pytest.raises(boxes.SignalingError):
        boxes.classify_extremal(b)


def test_box_json_and_shape():
    b = boxes.pr_box()
    assert_allclose(boxes.NonLocalBox.from_dict(b.to_dict()).probs, b.probs)
    with pytest.raises(ValueError):
        boxes.NonLocalBox(np.zeros(15))
