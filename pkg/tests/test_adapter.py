import sys
import textwrap

import pytest
from oracle import brute_force

from tsptw_transfer import MeteredEvaluator, evaluate_tour
from tsptw_transfer.solvers import EmptyOutcomeError, ProtocolError, external_adapter, run_exchange


def fake_solver(tmp_path, perms, interactive=False, extra=""):
    """Write a tiny external solver that proposes the given tours."""
    lines = [" ".join(map(str, p)) for p in perms]
    body = f"""
        import sys
        for tour in {lines!r}:
            print("perm: " + tour, flush=True)
            if {interactive!r}:
                reply = sys.stdin.readline().strip()
                if reply == "stop" or not reply:
                    break
                assert reply.startswith("score: "), reply
                float(reply[7:])
        {extra}
    """
    path = tmp_path / "fake_solver.py"
    path.write_text(textwrap.dedent(body))
    return [sys.executable, str(path)]


def test_counts_every_candidate(tmp_path, make_instance):
    inst, tour = make_instance(6, seed=1)
    perms = [tour[k:] + tour[:k] for k in range(6)] + [tour[::-1]] * 4
    ev = MeteredEvaluator(inst, budget=1000)
    out = external_adapter(fake_solver(tmp_path, perms), ev)
    assert out.evaluations_used == 10
    assert ev.used == 10


def test_best_of_stream(tmp_path, make_instance):
    inst, tour = make_instance(6, seed=2)
    best, arg = brute_force(inst.d.tolist(), inst.a.tolist(), inst.b.tolist())
    perms = [tour, tour[::-1], list(arg), tour[1:] + tour[:1]]
    out = external_adapter(fake_solver(tmp_path, perms, interactive=True), MeteredEvaluator(inst, 100))
    assert out.best.order == arg
    assert out.best.score == pytest.approx(best)


def test_stops_at_budget(tmp_path, make_instance):
    inst, tour = make_instance(5, seed=3)
    budget = 20
    perms = [tour] * (budget + 50)
    for interactive in (False, True):
        ev = MeteredEvaluator(inst, budget)
        out = external_adapter(fake_solver(tmp_path, perms, interactive), ev)
        assert out.evaluations_used == budget == ev.used


def test_malformed_line_reports_line_number(tmp_path, make_instance):
    inst, tour = make_instance(5, seed=3)
    script = fake_solver(tmp_path, [tour], extra='print("perm: 0 1 2 2 4")')
    with pytest.raises(ProtocolError) as err:
        external_adapter(script, MeteredEvaluator(inst, 100))
    assert err.value.lineno == 2
    with pytest.raises(ProtocolError) as err:
        run_exchange(["perm: 0 1 2 3 4", "", "route: 0 1 2 3 4"], MeteredEvaluator(inst, 100), lambda s: None)
    assert err.value.lineno == 3
    with pytest.raises(ProtocolError):
        run_exchange(["perm: 0 1 x 3 4"], MeteredEvaluator(inst, 100), lambda s: None)


def test_silent_solver(tmp_path, make_instance):
    inst, _ = make_instance(5)
    with pytest.raises(EmptyOutcomeError):
        external_adapter(fake_solver(tmp_path, []), MeteredEvaluator(inst, 100))


def test_reply_format(make_instance):
    inst, tour = make_instance(5, seed=4)
    sent = []
    line = "perm: " + " ".join(map(str, tour))
    run_exchange([line, line + "\n"], MeteredEvaluator(inst, 100), sent.append)
    value = evaluate_tour(inst, tour).score
    assert sent == [f"score: {value!r}\n"] * 2 + ["stop\n"]
