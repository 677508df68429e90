import json
import socket
import threading
import time

import pytest

from apconflict import cli


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSolveCommand:
    def test_csv_table_on_stdout(self, capsys):
        code, out, err = run_cli(capsys, "solve", "--lambda", "1", "--beta", "1",
                                 "--alpha", "0.5", "--grid", "5")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "r,f1,f2,feasible1,feasible2"
        assert len(lines) == 6
        row = dict(zip(lines[0].split(","), lines[3].split(",")))
        assert float(row["r"]) == 0.5
        assert float(row["f1"]) == pytest.approx(0.148148, abs=1e-6)
        assert float(row["f2"]) == pytest.approx(0.148148, abs=1e-6)
        meta = json.loads(err)
        assert meta["solution"]["k0"] == 1.0

    def test_json_format(self, capsys):
        code, out, _ = run_cli(capsys, "solve", "--lambda", "1.2", "--beta", "1",
                               "--alpha", "0.3", "--grid", "4", "--format", "json")
        assert code == 0
        body = json.loads(out)
        assert body["ratios"]["lambda"] == 1.2
        assert body["solution"]["method"] == "iterated_general"
        assert len(body["table"]["r"]) == 4

    def test_output_files_and_roundtrip(self, capsys, tmp_path):
        out_path = tmp_path / "table.csv"
        code, out, _ = run_cli(capsys, "solve", "--lambda", "1", "--beta", "1",
                               "--alpha", "0.5", "--grid", "64",
                               "--output", str(out_path))
        assert code == 0
        assert out == ""
        sidecar = tmp_path / "table.json"
        assert sidecar.exists()
        assert json.loads(sidecar.read_text())["solution"]["k0"] == 1.0

        # written values must round-trip exactly through the decimal text
        from apconflict.equal import eval_equal_strategy
        lines = out_path.read_text().splitlines()
        for line in lines[1:]:
            r, f1, f2, *_ = line.split(",")
            want1, want2 = eval_equal_strategy(float(r), 1.0, 0.5)
            assert float(f1) == want1
            assert float(f2) == want2

    def test_method_selection(self, capsys):
        code, out, err = run_cli(capsys, "solve", "--lambda", "1.2", "--beta", "1",
                                 "--alpha", "0.3", "--method", "converge",
                                 "--grid", "4", "--format", "json")
        assert code == 0
        body = json.loads(out)
        assert body["diagnostics"]["converged"] is True
        assert body["solution"]["k0"] == pytest.approx(1.000138865935848, rel=1e-9)


class TestExitCodes:
    def test_invalid_alpha_is_config_error(self, capsys):
        code, _, err = run_cli(capsys, "solve", "--lambda", "1", "--beta", "1",
                               "--alpha", "1.2")
        assert code == 2
        assert "error" in err

    def test_missing_parameters_is_config_error(self, capsys):
        code, _, _ = run_cli(capsys, "solve", "--alpha", "0.5")
        assert code == 2

    def test_divergence_exit(self, capsys):
        code, _, err = run_cli(capsys, "solve", "--lambda", "1.5", "--beta", "1",
                               "--alpha", "0.1306", "--epsilon", "0.09",
                               "--method", "converge")
        assert code == 3
        assert "divergence" in err

    def test_verify_pass_and_fail(self, capsys, tmp_path):
        code, out, err = run_cli(capsys, "verify", "--lambda", "1", "--beta", "1",
                                 "--alpha", "0.5")
        assert code == 0
        assert json.loads(out)["passed"] is True

        code, out, _ = run_cli(capsys, "verify", "--lambda", "1", "--beta", "1",
                               "--alpha", "0.5", "--tol-ode", "1e-12")
        assert code == 4
        assert json.loads(out)["passed"] is False

    def test_verify_general_case_uses_auto_tolerances(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--lambda", "1.2", "--beta", "1",
                               "--alpha", "0.3")
        assert code == 0
        body = json.loads(out)
        assert body["passed"] is True
        assert body["tol_ode"] == 1e-5
        assert body["tol_best_response"] == 5e-3


class TestSimulateCommand:
    def test_byte_identical_across_runs_and_threads(self, capsys, tmp_path, monkeypatch):
        args = ("simulate", "--lambda", "1", "--beta", "1", "--alpha", "0.5",
                "--n", "100000", "--seed", "42")
        monkeypatch.setenv("APC_THREADS", "1")
        run_cli(capsys, *args, "--output", str(tmp_path / "a.json"))
        monkeypatch.setenv("APC_THREADS", "4")
        run_cli(capsys, *args, "--output", str(tmp_path / "b.json"))
        a = (tmp_path / "a.json").read_bytes()
        b = (tmp_path / "b.json").read_bytes()
        assert a == b
        body = json.loads(a)
        assert body["n_draws"] == 100000

    def test_trace_file(self, capsys, tmp_path):
        trace = tmp_path / "trace.csv"
        code, out, _ = run_cli(capsys, "simulate", "--lambda", "1", "--beta", "1",
                               "--alpha", "0.5", "--n", "100", "--seed", "1",
                               "--trace", str(trace))
        assert code == 0
        lines = trace.read_text().splitlines()
        assert lines[0] == "draw,r1,r2,b1,b2,winner,w1,w2"
        assert len(lines) == 101

    def test_params_file_with_flag_precedence(self, capsys, tmp_path):
        params = tmp_path / "params.json"
        params.write_text(json.dumps({"lambda": 2.0, "beta": 1.0, "alpha": 0.3,
                                      "epsilon": 1e-3}))
        code, out, _ = run_cli(capsys, "simulate", "--params-file", str(params),
                               "--lambda", "1.0", "--beta", "1.0",
                               "--n", "1000", "--seed", "1")
        assert code == 0
        body = json.loads(out)
        assert body["ratios"]["lambda"] == 1.0
        assert body["method"] == "equal"


class TestSweepCommand:
    def test_csv_rows(self, capsys):
        code, out, _ = run_cli(capsys, "sweep", "--lambda", "1", "--beta", "1",
                               "--alpha", "0.3", "--sweep", "lambda:1.0:1.2:3",
                               "--n", "1000")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("value,lambda,beta")
        assert len(lines) == 4
        first = lines[1].split(",")
        assert float(first[0]) == 1.0
        assert float(first[6]) == 1.0  # k0 at the equal point

    def test_bad_spec_is_config_error(self, capsys):
        code, _, _ = run_cli(capsys, "sweep", "--lambda", "1", "--beta", "1",
                             "--alpha", "0.3", "--sweep", "lambda:1:2")
        assert code == 2

    def test_json_format(self, capsys):
        code, out, _ = run_cli(capsys, "sweep", "--lambda", "1", "--beta", "1",
                               "--alpha", "0.3", "--sweep", "alpha:0.2:0.4:2",
                               "--n", "500", "--format", "json")
        assert code == 0
        body = json.loads(out)
        assert body["param"] == "alpha"
        assert len(body["rows"]) == 2


@pytest.fixture(scope="module")
def live_server():
    import httpx
    import uvicorn

    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
    config = uvicorn.Config("apconflict.api:app", host="127.0.0.1", port=port,
                            log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{port}"
    deadline = time.time() + 30
    while time.time() < deadline:
        try:
            if httpx.get(url + "/health", timeout=1.0).status_code == 200:
                break
        except Exception:
            time.sleep(0.05)
    else:
        raise RuntimeError("test server did not come up")
    yield url
    server.should_exit = True
    thread.join(timeout=10)


class TestServerMode:
    def test_solve_against_live_server(self, capsys, live_server):
        code, out, err = run_cli(capsys, "solve", "--lambda", "1", "--beta", "1",
                                 "--alpha", "0.5", "--grid", "5",
                                 "--server", live_server)
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 6
        assert json.loads(err)["solution"]["k0"] == 1.0

    def test_remote_result_matches_local(self, capsys, live_server):
        args = ("simulate", "--lambda", "1", "--beta", "1", "--alpha", "0.5",
                "--n", "5000", "--seed", "3")
        code_r, out_remote, _ = run_cli(capsys, *args, "--server", live_server)
        code_l, out_local, _ = run_cli(capsys, *args)
        assert code_r == code_l == 0
        assert json.loads(out_remote) == json.loads(out_local)

    def test_server_side_config_error(self, capsys, live_server):
        code, _, err = run_cli(capsys, "solve", "--lambda", "1.2", "--beta", "1",
                               "--alpha", "0.0", "--server", live_server)
        assert code == 2

    def test_trace_not_available_remotely(self, capsys, live_server, tmp_path):
        code, _, err = run_cli(capsys, "simulate", "--lambda", "1", "--beta", "1",
                               "--alpha", "0.5", "--n", "10",
                               "--server", live_server,
                               "--trace", str(tmp_path / "t.csv"))
        assert code == 2
