import json

import numpy as np
import pytest

from ahlfors_fredholm.errors import InvalidArgumentError
from ahlfors_fredholm.parallel import chunk_ranges, map_chunks
from ahlfors_fredholm.reports import build_document, dumps, to_jsonable, write_report, write_vectors_csv
from ahlfors_fredholm.settings import (
    DEFAULT_TOLERANCES, WORKERS_ENV, RunConfig, Tolerances, load_tolerances, save_tolerances, worker_count,
)


class TestTolerances:
    def test_defaults(self):
        assert DEFAULT_TOLERANCES.residual == 1e-10
        assert DEFAULT_TOLERANCES.growth_ceiling == 1.25
        assert DEFAULT_TOLERANCES.eps == 1e-3
        assert DEFAULT_TOLERANCES.grid_ratio == 2 ** 0.25

    def test_file_then_overrides(self, tmp_path):
        path = tmp_path / "settings.json"
        save_tolerances(Tolerances(residual=1e-9, eps=0.01), path)
        loaded = load_tolerances(path, {'eps': 0.02, 'residual': None})
        assert loaded.residual == 1e-9
        assert loaded.eps == 0.02

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidArgumentError):
            load_tolerances(tmp_path / "absent.json")

    def test_invalid_value(self):
        with pytest.raises(InvalidArgumentError):
            load_tolerances(overrides={'growth_ceiling': 0.5})

    def test_run_config_target_norm(self):
        with pytest.raises(ValueError):
            RunConfig(command='solve', target_norm=1.0)


class TestWorkers:
    def test_default(self, monkeypatch):
        monkeypatch.delenv(WORKERS_ENV, raising=False)
        assert worker_count() == 1

    @pytest.mark.parametrize("raw", ["0", "-2", "many"])
    def test_invalid(self, monkeypatch, raw):
        monkeypatch.setenv(WORKERS_ENV, raw)
        with pytest.raises(InvalidArgumentError):
            worker_count()

    def test_chunks_cover_range(self):
        ranges = chunk_ranges(10, 3)
        assert [list(r) for r in ranges] == [[0, 1, 2], [3, 4, 5, 6], [7, 8, 9]]
        assert chunk_ranges(2, 5) == [range(0, 1), range(1, 2)]

    def test_results_in_order(self):
        serial = map_chunks(lambda r: sum(r), 1000, workers=1, chunk_size=64)
        threaded = map_chunks(lambda r: sum(r), 1000, workers=4, chunk_size=64)
        assert serial == threaded
        assert sum(serial) == sum(range(1000))
        assert map_chunks(lambda r: 1, 0) == []


class TestReports:
    def test_jsonable(self):
        value = to_jsonable({'a': np.float64(1.5), 'b': np.arange(3), 'c': 1 + 2j, 'd': float('inf'),
                             'e': (1, None), 'f': DEFAULT_TOLERANCES})
        assert value['a'] == 1.5
        assert value['b'] == [0, 1, 2]
        assert value['c'] == {'re': 1.0, 'im': 2.0}
        assert value['d'] == 'inf'
        assert value['e'] == [1, None]
        assert value['f']['residual'] == 1e-10

    def test_document_keys_are_sorted(self):
        text = dumps(build_document('solve', {'z': 1, 'a': 2}, {'y': [1.0]}, passed=True))
        assert json.loads(text)['passed'] is True
        assert text.index('"a"') < text.index('"z"')
        assert text.endswith("\n")

    def test_write_to_stream_or_file(self, tmp_path, capsys):
        document = build_document('seminorm', {}, {'x': 1})
        write_report(document, stream=None)
        assert capsys.readouterr().out == ""
        path = tmp_path / "report.json"
        write_report(document, path)
        assert json.loads(path.read_text(encoding="utf-8")) == document

    def test_csv(self, tmp_path):
        path = tmp_path / "vectors.csv"
        write_vectors_csv(path, {'mu': np.array([1 + 1j, 2.0]), 'g': [0.5, 0.25]})
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "mu_re,mu_im,g"
        np.testing.assert_allclose(np.loadtxt(path, delimiter=',', skiprows=1), [[1, 1, 0.5], [2, 0, 0.25]])

    def test_csv_lengths(self, tmp_path):
        with pytest.raises(InvalidArgumentError):
            write_vectors_csv(tmp_path / "bad.csv", {'a': [1.0], 'b': [1.0, 2.0]})
