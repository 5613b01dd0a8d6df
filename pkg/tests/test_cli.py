import io
import json

import pytest

from cardproto.cli import main, parse_prior
from cardproto.deck import Scheme, encode_int
from cardproto.protocols import build, five_card_trick
from cardproto.script import reference_script, to_script


def cli(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


# ---------------------------------------------------------------- run


def test_run_hides_committed_output_by_default():
    code, text = cli("run", "equality_second", "--n", "3", "--input", "1,1,1", "--seed", "7")
    assert code == 0
    assert text.splitlines()[-1] == "committed output face down at 1,2 (decode with --unsafe-peek)"
    assert "decodes" not in text


def test_run_unsafe_peek_decodes():
    code, text = cli("run", "equality_second", "--n", "3", "--input", "1,1,1", "--seed", "7", "--unsafe-peek")
    assert code == 0 and text.splitlines()[-1] == "committed output decodes to 1"


def test_run_five_card_trick():
    code, text = cli("run", "five_card_trick", "--input", "1,0", "--seed", "1")
    assert code == 0 and text.splitlines()[-1] == "result 0"


def test_run_add_ends_in_heart_encoding_of_one():
    code, text = cli("run", "add", "--k", "3", "--a", "1", "--b", "0", "--seed", "2", "--format", "json",
                     "--unsafe-peek")
    report = json.loads(text)
    assert code == 0 and report["result"] == {"kind": "encoded", "value": 1,
                                              "line": "encoded output decodes to 1"}
    final = report["steps"][-1]["deck"]
    assert final.upper()[:3] == encode_int(1, 3, Scheme.HEART).cards.suits


def test_run_json_without_peek_has_no_value():
    code, text = cli("run", "equality_first", "--n", "3", "--input", "1,0,1", "--format", "json")
    report = json.loads(text)
    assert report["result"]["kind"] == "public" and report["result"]["value"] == 0
    code, text = cli("run", "equality_second", "--n", "3", "--input", "0,0,0", "--format", "json")
    assert "value" not in json.loads(text)["result"]
    assert all(set(s["deck"]) <= set("?CH") for s in json.loads(text)["steps"])


def test_run_is_seed_deterministic():
    argv = ("run", "equality_first", "--n", "4", "--input", "1,1,0,1", "--seed", "9", "--format", "json")
    assert cli(*argv) == cli(*argv)


# ---------------------------------------------------------------- verify / analyze / resources


def test_verify_equality_first_four():
    code, text = cli("verify", "equality_first", "--n", "4")
    assert code == 0
    assert "correctness  pass  (16 inputs)" in text and "security     pass" in text
    assert "8 cards" in text and "4 shuffles" in text


def test_verify_json_resources():
    code, text = cli("verify", "equality_first", "--n", "4", "--format", "json")
    res = json.loads(text)["resources"]
    assert code == 0 and (res["cards"], res["shuffles"]) == (8, 4)
    assert text.endswith("}\n")


def test_resources_kcand():
    code, text = cli("resources", "kcand_equality", "--n", "3", "--k", "4", "--format", "json")
    res = json.loads(text)["resources"]
    assert code == 0 and (res["cards"], res["shuffles"]) == (12, 5)


def test_analyze_five_card_trick_uniform(tmp_path):
    code, text = cli("analyze", "five_card_trick", "--prior", "uniform", "--plot-dir", str(tmp_path))
    assert code == 0
    assert "posteriors   10/10 traces leave the prior unchanged" in text
    for name in ("five_card_trick_traces.png", "five_card_trick_posteriors.png"):
        assert (tmp_path / name).stat().st_size > 0


def test_verify_writes_trace_figure(tmp_path):
    code, text = cli("verify", "equality_first", "--n", "3", "--plot-dir", str(tmp_path), "--format", "json")
    assert code == 0 and json.loads(text)["figures"] == [str(tmp_path / "equality_first_traces.png")]


def test_insecure_protocol_exits_two():
    code, text = cli("verify", "leaky_equality", "--n", "3")
    assert code == 2 and "security     FAIL" in text and "has probability" in text


def test_analyze_reports_leaking_traces():
    code, text = cli("analyze", "equality_first_no_final_cut", "--n", "3", "--format", "json")
    report = json.loads(text)
    assert code == 2 and not report["posteriors_match_prior"]


def test_analyze_with_point_prior_and_upto():
    code, text = cli("analyze", "equality_first", "--n", "3", "--prior", "point:1,0,1", "--upto", "1",
                     "--format", "json")
    report = json.loads(text)
    assert code == 0 and report["upto"] == 1
    assert report["prior"]["1,0,1"] == "1/1"


def test_parse_prior_forms():
    p = five_card_trick()
    assert parse_prior("0,0=1/2;1,1=1/2", p)[(1, 1)] == parse_prior("0,0=1/2;1,1=1/2", p)[(0, 0)]
    assert parse_prior("point:0,1", p)[(0, 1)] == 1
    assert sum(parse_prior("uniform", p).values()) == 1


def test_budget_exhaustion_exits_three():
    code, text = cli("verify", "equality_first", "--n", "4", "--budget", "50", "--format", "json")
    assert code == 3 and json.loads(text)["status"] == "budget-exceeded"


def test_sampled_mode_requires_seed_and_says_it_is_not_a_proof():
    assert cli("verify", "equality_first", "--n", "3", "--sample", "3")[0] == 1
    code, text = cli("verify", "equality_first", "--n", "3", "--sample", "3", "--seed", "1")
    assert code == 0 and "not a proof" in text
    code, _ = cli("verify", "equality_first_no_final_cut", "--n", "3", "--sample", "5", "--seed", "1")
    assert code == 2


@pytest.mark.parametrize("argv", [
    ("verify",),
    ("verify", "nope"),
    ("verify", "five_card_trick", "--script", "x.cardp"),
    ("run", "five_card_trick", "--input", "1,2"),
    ("run", "five_card_trick", "--input", "1"),
    ("verify", "equality_first", "--n", "1"),
    ("verify", "symmetric", "--n", "3", "--g", "0,1"),
    ("analyze", "five_card_trick", "--prior", "0,0=1/3"),
])
def test_usage_errors_exit_one(argv):
    assert cli(*argv)[0] == 1


def test_argparse_errors_use_exit_one():
    with pytest.raises(SystemExit) as info:
        main(["verify", "five_card_trick", "--threads", "x"], out=io.StringIO())
    assert info.value.code == 1


def test_json_is_identical_across_worker_counts():
    base = ("verify", "equality_first", "--n", "4", "--format", "json")
    assert cli(*base, "--threads", "1") == cli(*base, "--threads", "3")


def test_threads_from_environment(monkeypatch):
    base = ("verify", "equality_first", "--n", "3", "--format", "json")
    one = cli(*base)
    monkeypatch.setenv("CARDPROTO_THREADS", "2")
    assert cli(*base) == one


# ---------------------------------------------------------------- scripts


def test_check_script_ok(tmp_path):
    path = tmp_path / "five.cardp"
    path.write_text(reference_script("five_card_trick"))
    code, text = cli("check-script", str(path))
    assert code == 0 and text == f"{path}: ok (five_card_trick, 5 cards, 2 inputs)\n"


def test_check_script_reports_diagnostics(tmp_path):
    path = tmp_path / "bad.cardp"
    path.write_text("protocol bad\ninputs 2 bits\ncards 5\nfunction and\nlayout commit 1\nlayout card C\n"
                    "layout commit 2\n\nperm (4 9)\nfrobnicate\n")
    code, text = cli("check-script", str(path), "--format", "json")
    report = json.loads(text)
    assert code == 1 and not report["ok"]
    assert [(d["line"], d["code"]) for d in report["diagnostics"]] == [(9, "position-range"),
                                                                      (10, "unknown-statement")]


def test_check_script_reports_elaboration_problems(tmp_path):
    path = tmp_path / "short.cardp"
    path.write_text("protocol short\ninputs 2 bits\ncards 6\nfunction and\nlayout commit 1\nlayout card C\n"
                    "layout commit 2\n\noutput public bit 1 2\n")
    code, text = cli("check-script", str(path))
    assert code == 1 and f"{path}:3:" in text


def test_verify_script_matches_builtin(tmp_path):
    path = tmp_path / "eq.cardp"
    path.write_text(to_script(build("equality_second", n=3)))
    script_report = json.loads(cli("verify", "--script", str(path), "--format", "json")[1])
    builtin_report = json.loads(cli("verify", "equality_second", "--n", "3", "--format", "json")[1])
    assert script_report == builtin_report


def test_script_rejects_builtin_flags(tmp_path):
    path = tmp_path / "five.cardp"
    path.write_text(reference_script("five_card_trick"))
    assert cli("verify", "--script", str(path), "--n", "3")[0] == 1
