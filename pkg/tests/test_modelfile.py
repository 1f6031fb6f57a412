import json

import numpy as np
import pytest

from contourcomposer import modelfile
from contourcomposer.errors import SchemaError


def test_round_trip_is_structural_and_byte_identical(trained):
    text = modelfile.dumps(trained)
    loaded = modelfile.loads(text)
    assert loaded.config == trained.config
    assert loaded.pitch_model == trained.pitch_model
    assert loaded.duration_model == trained.duration_model
    for a, b in ((loaded.pitch_contour, trained.pitch_contour), (loaded.rhythm_contour, trained.rhythm_contour)):
        assert a.selected_cluster == b.selected_cluster
        assert np.array_equal(a.curve, b.curve)
        assert np.array_equal(a.mean_spectrum, b.mean_spectrum)
        assert [c.size for c in a.clusters] == [c.size for c in b.clusters]
    assert modelfile.dumps(loaded) == text


def test_rows_are_stochastic_in_file(trained):
    doc = json.loads(modelfile.dumps(trained))
    for name in ("pitch_model", "duration_model"):
        for row in doc[name]["rows"]:
            assert abs(sum(row["probs"]) - 1) < 1e-9
            assert "/" in row["offbeat"]


def test_schema_error_names_the_field(trained):
    doc = json.loads(modelfile.dumps(trained))
    doc["pitch_model"]["rows"][0]["offbeat"] = 0.5
    with pytest.raises(SchemaError, match="/pitch_model/rows/0/offbeat"):
        modelfile.loads(json.dumps(doc))


def test_schema_error_for_missing_section(trained):
    doc = json.loads(modelfile.dumps(trained))
    del doc["rhythm_contour"]
    with pytest.raises(SchemaError, match="rhythm_contour"):
        modelfile.loads(json.dumps(doc))


def test_successor_index_outside_alphabet(trained):
    doc = json.loads(modelfile.dumps(trained))
    doc["duration_model"]["rows"][0]["successors"][0] = 999
    with pytest.raises(SchemaError, match="successors"):
        modelfile.loads(json.dumps(doc))


def test_not_json():
    with pytest.raises(SchemaError):
        modelfile.loads("{nope")
