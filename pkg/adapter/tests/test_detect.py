import json

import pytest

from detection_adapter import ParamError, SetupError
from detection_adapter.cli import main as cli_main
from detection_adapter.detect import (CallableBackend, FixtureBackend,
                                      WeightsBackend, adapt_raw_result,
                                      detect_images, load_class_map)
from detection_adapter.schema import validate_detection_set


class TestFixtureBackend:
    def test_known_image_schema_valid(self, fixtures_dir):
        backend = FixtureBackend(fixtures_dir / "raw_detections.json")
        records = detect_images(["facade_a.jpg"], backend)
        assert len(records) == 1
        rec = records[0]
        assert validate_detection_set(rec) == []
        assert sum(d["class"] == "window" for d in rec["detections"]) >= 1

    def test_class_mapping_and_drops(self, fixtures_dir):
        backend = FixtureBackend(fixtures_dir / "raw_detections.json")
        rec = detect_images(["facade_a.jpg"], backend)[0]
        classes = [d["class"] for d in rec["detections"]]
        # win/door_main/balustrade map; the lamp drops
        assert classes.count("window") == 3
        assert classes.count("door") == 1
        assert classes.count("balcony") == 1
        assert len(classes) == 5

    def test_bbox_clamped_to_image(self, fixtures_dir):
        backend = FixtureBackend(fixtures_dir / "raw_detections.json")
        rec = detect_images(["facade_b.png"], backend)[0]
        assert validate_detection_set(rec) == []
        for det in rec["detections"]:
            x0, y0, x1, y1 = det["bbox"]
            assert 0 <= x0 < x1 <= rec["image_width_px"]
            assert 0 <= y0 < y1 <= rec["image_height_px"]

    def test_no_mapped_detections_still_valid(self, fixtures_dir):
        backend = FixtureBackend(fixtures_dir / "raw_detections.json")
        rec = detect_images(["facade_empty"], backend)[0]
        assert rec["detections"] == []
        assert validate_detection_set(rec) == []

    def test_unknown_image_rejected(self, fixtures_dir):
        backend = FixtureBackend(fixtures_dir / "raw_detections.json")
        with pytest.raises(ParamError):
            detect_images(["nope.jpg"], backend)


class TestOtherBackends:
    def test_callable_backend(self):
        backend = CallableBackend("toy_backend:fake_detector")
        rec = detect_images(["x.jpg"], backend)[0]
        assert rec["detections"][0]["class"] == "window"
        assert validate_detection_set(rec) == []

    def test_bad_callable_spec(self):
        with pytest.raises(SetupError):
            CallableBackend("no_such_module:fn")

    def test_missing_weights_instructs_fixture_mode(self, tmp_path):
        with pytest.raises(SetupError, match="fixture"):
            WeightsBackend(tmp_path / "missing.weights")


class TestAdaptRaw:
    def test_custom_class_map(self, tmp_path):
        table = tmp_path / "map.json"
        table.write_text(json.dumps({"opening": "window"}))
        cmap = load_class_map(table)
        raw = {"width": 100, "height": 100,
               "detections": [{"label": "OPENING", "box": [1, 1, 9, 9],
                               "score": 0.5}]}
        rec = adapt_raw_result("img", raw, cmap)
        assert rec["detections"][0]["class"] == "window"

    def test_malformed_raw_rejected(self):
        with pytest.raises(ParamError):
            adapt_raw_result("img", {"width": 10, "detections": []})

    def test_degenerate_box_dropped(self):
        raw = {"width": 100, "height": 100,
               "detections": [{"label": "window", "box": [150, 10, 190, 20],
                               "score": 0.9}]}
        rec = adapt_raw_result("img", raw)
        assert rec["detections"] == []  # fully outside, clamps to zero area


class TestDetectCLI:
    def test_fixture_mode(self, fixtures_dir, tmp_path):
        out = tmp_path / "out.jsonl"
        code = cli_main(["detect", "facade_a.jpg", "facade_b.png",
                         "--fixture", str(fixtures_dir / "raw_detections.json"),
                         "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 2
        for line in lines:
            assert validate_detection_set(json.loads(line)) == []

    def test_missing_weights_exit_2(self, tmp_path, capsys):
        code = cli_main(["detect", "img.jpg", "--out", str(tmp_path / "o.jsonl"),
                         "--weights", str(tmp_path / "none.weights")])
        assert code == 2
        assert "fixture" in capsys.readouterr().err

    def test_no_images_exit_2(self, fixtures_dir, tmp_path):
        code = cli_main(["detect", "--out", str(tmp_path / "o.jsonl"),
                         "--fixture", str(fixtures_dir / "raw_detections.json")])
        assert code == 2
