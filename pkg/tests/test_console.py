"""Tests for asymcom.ui.console — stream routing, colour switch and formatting."""
import pytest

from asymcom.ui.console import Console, fmt_complex, get_console, set_console


class TestFormatting:
    @pytest.mark.parametrize("z, text", [
        (1 - 2j, "1-2i"),
        (0.5 + 0j, "0.5+0i"),
        (-3 + 0.25j, "-3+0.25i"),
    ])
    def test_fmt_complex(self, z, text):
        assert fmt_complex(z) == text

    def test_style_off_is_plain(self):
        assert Console(color=False).style("x", "bold", "red") == "x"

    def test_style_on_wraps_codes(self):
        assert Console(color=True).style("x", "bold", "red") == "\033[1;31mx\033[0m"

    def test_no_color_env(self, monkeypatch):
        monkeypatch.setenv("NO_COLOR", "1")
        monkeypatch.setenv("FORCE_COLOR", "1")
        assert Console().color is False


class TestStreams:
    def test_results_on_stdout(self, capsys):
        c = Console(color=False)
        c.print_value("a", 0.2 + 0j)
        c.print_singularity(1 + 1j, (0, 1), "confirmed", 8.04)
        out, err = capsys.readouterr()
        assert "a" in out and "0.2+0i" in out
        assert "✓ x_sing = 1+1i  shift=[0, 1]  confirmed  8.0 digits" in out
        assert err == ""

    def test_error_on_stderr(self, capsys):
        Console(color=False).print_error("NearRoot", "too close", ["y: 0.3"], "move away")
        out, err = capsys.readouterr()
        assert out == ""
        assert "ERROR: NearRoot" in err
        assert "  y: 0.3" in err
        assert "Hint: move away" in err

    @pytest.mark.parametrize("debug, verbose, shown", [
        (False, False, False),
        (True, False, True),
        (False, True, True),
    ])
    def test_debug_gate(self, capsys, debug, verbose, shown):
        Console(debug=debug, verbose=verbose, color=False).print_debug("fit ok")
        assert ("fit ok" in capsys.readouterr().err) is shown

    def test_unknown_status_is_marked_failed(self, capsys):
        Console(color=False).print_singularity(2j, (0,), "mismatch", None)
        assert "✗" in capsys.readouterr().out


class TestSingleton:
    def test_set_and_get(self):
        previous = get_console()
        mine = Console(verbose=True)
        set_console(mine)
        try:
            assert get_console() is mine
        finally:
            set_console(previous)
