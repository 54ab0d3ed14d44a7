# tests/test_bench_dsl.py
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parity_teleport.apparatus import BenchLayout, build_bell_analyzer, derive_detector_map
from parity_teleport.bench_dsl import (
    PrepareDecl,
    RunDirective,
    SourceDecl,
    format_complex,
    layout_text,
    lower,
    parse,
    pretty_print,
    program_from_layout,
    tokenize,
)
from parity_teleport.elements import bs_5050, compose, dp_sph, parity_phase
from parity_teleport.errors import (
    BenchParseError,
    BenchSemanticError,
    BenchSyntaxError,
    LexicalError,
    LoweringError,
    WiringError,
)
from parity_teleport.hilbert import OamWindow
from parity_teleport.models import ProfileSpec
from parity_teleport.protocol import swap_circuit

DATA = Path(__file__).parent / "data"
SOURCE = "source spdc l=1 K=2 profile=uniform\n"


@pytest.fixture
def analyzer_text():
    return (DATA / "bell_analyzer.bench").read_bytes()


class TestTokenize:
    def test_comments_and_blank_lines(self):
        """Test that comments and empty lines produce no tokens"""
        lines = tokenize("# header\n\nsource spdc  l=1 # trailing\n")
        assert [[t.text for t in line] for line in lines] == [["source", "spdc", "l=1"]]
        assert lines[0][2].column == 14
        assert lines[0][0].line == 3

    def test_crlf(self):
        """Test that Windows line endings are accepted"""
        assert len(tokenize("detect D1 A\r\ndetect D2 B\r\n")) == 2

    def test_unexpected_character(self):
        """Test a positioned lexical error"""
        with pytest.raises(LexicalError) as exc:
            tokenize(SOURCE + "detect D1 @\n")
        assert (exc.value.line, exc.value.column) == (2, 11)

    def test_bad_utf8(self):
        """Test that undecodable bytes are a lexical error"""
        with pytest.raises(LexicalError):
            parse(b"\xff")


class TestParse:
    def test_analyzer_file(self, analyzer_text):
        """Test the bundled analyzer program"""
        program = parse(analyzer_text)
        assert program.source.K == 2
        assert program.prepare.alpha == (0.6, 0.0)
        assert len(program.elements) == 11
        assert [d.name for d in program.detectors] == ["D1", "D2", "D3", "D4"]
        assert program.run.mode == "apparatus"

    def test_angles(self):
        """Test pi fractions and plain reals as angles"""
        program = parse(SOURCE + "element A hwp(pi/4)\nelement A qwp(-pi)\nelement A delay(0.5)\ndetect D1 A\n")
        assert [e.angle for e in program.elements] == pytest.approx([np.pi / 4, -np.pi, 0.5])

    def test_missing_output_after_arrow(self):
        """Test the position of a dangling arrow"""
        with pytest.raises(BenchSyntaxError) as exc:
            parse(SOURCE + "element A sph -> \ndetect D1 A\n")
        assert (exc.value.line, exc.value.column) == (2, 15)

    def test_unknown_statement(self):
        """Test that unknown keywords are syntax errors"""
        with pytest.raises(BenchSyntaxError, match="unknown statement"):
            parse(SOURCE + "mirror A\n")

    def test_unknown_element(self):
        """Test that unknown element kinds are syntax errors"""
        with pytest.raises(BenchSyntaxError, match="unknown element kind"):
            parse(SOURCE + "element A prism\ndetect D1 A\n")

    def test_path_reused(self):
        """Test that a wired name cannot be produced again"""
        text = SOURCE + "element A sorter -> A odd\nelement A pbs -> A odd\ndetect D1 A\n"
        with pytest.raises(BenchSemanticError, match="path reused") as exc:
            parse(text)
        assert exc.value.line == 3

    def test_closed_path(self):
        """Test that a merged-away path is closed"""
        text = SOURCE + "element A sorter -> A odd\nelement A pbs odd -> A\nelement odd dove\ndetect D1 A\n"
        with pytest.raises(BenchSemanticError, match="closed path"):
            parse(text)

    def test_cross_photon_element(self):
        """Test that one element cannot join both photons"""
        with pytest.raises(BenchSemanticError, match="belongs to photon"):
            parse(SOURCE + "element A bs B\ndetect D1 A\n")

    def test_duplicate_source(self):
        """Test that only one source is allowed"""
        with pytest.raises(BenchSemanticError, match="duplicate source") as exc:
            parse(SOURCE + SOURCE + "detect D1 A\n")
        assert exc.value.line == 2

    def test_missing_source(self):
        """Test that a program needs a source"""
        with pytest.raises(BenchSemanticError, match="no source"):
            parse("detect D1 A\n")

    def test_missing_detector(self):
        """Test that a program needs a detector"""
        with pytest.raises(BenchSemanticError, match="no detector"):
            parse(SOURCE)

    def test_detector_on_photon_b(self):
        """Test that detectors watch photon A only"""
        with pytest.raises(BenchSemanticError, match="belongs to B"):
            parse(SOURCE + "detect D1 B\n")

    def test_huge_window(self):
        """Test that K beyond the supported maximum is a positioned semantic error"""
        with pytest.raises(BenchSemanticError, match="exceeds the maximum") as exc:
            parse("source spdc l=1 K=100000000000 profile=uniform\ndetect D1 A\n")
        assert (exc.value.line, exc.value.column) == (1, 17)

    def test_correction_kinds(self):
        """Test Bob's correction elements as single-arm kinds"""
        program = parse(SOURCE + "element B dp_sph\nelement B parity_phase(pi)\ndetect D1 A\n")
        assert [e.kind for e in program.elements] == ["dp_sph", "parity_phase"]
        assert program.elements[1].angle == pytest.approx(np.pi)

    def test_parity_phase_needs_angle(self):
        """Test that parity_phase without an angle is a syntax error"""
        with pytest.raises(BenchSyntaxError, match="needs an angle"):
            parse(SOURCE + "element B parity_phase\ndetect D1 A\n")

    def test_bad_gaussian_width(self):
        """Test that a gaussian width must be positive"""
        with pytest.raises(BenchSemanticError, match="positive"):
            parse("source spdc l=1 K=2 profile=gaussian(-1.0)\ndetect D1 A\n")

    def test_bad_mode(self):
        """Test that the run mode is checked"""
        with pytest.raises(BenchSyntaxError, match="mode"):
            parse(SOURCE + "detect D1 A\nrun trials=10 seed=1 mode=oracle\n")


class TestPrettyPrint:
    def test_analyzer_round_trip(self, analyzer_text):
        """Test that printing then parsing gives the same program"""
        program = parse(analyzer_text)
        assert parse(pretty_print(program)) == program

    def test_canonical(self, analyzer_text):
        """Test that printing is idempotent"""
        text = pretty_print(parse(analyzer_text))
        assert pretty_print(parse(text)) == text

    def test_format_complex(self):
        """Test the a+bi literal form"""
        assert format_complex((0.6, -0.8)) == "0.6-0.8i"
        assert format_complex((1.0, 0.0)) == "1.0+0.0i"


class TestLower:
    def test_analyzer_matches_builder(self, analyzer_text):
        """Test that the bundled program lowers to the built-in analyzer"""
        lowered = lower(parse(analyzer_text))
        reference = build_bell_analyzer(OamWindow(2))
        assert lowered.layout.n_paths == reference.n_paths
        assert lowered.layout.detector_paths == reference.detector_paths
        np.testing.assert_allclose(lowered.layout.unitary.matrix, reference.unitary.matrix, atol=1e-12)
        assert derive_detector_map(lowered.layout) == derive_detector_map(reference)
        assert lowered.bob_op is None

    def test_run_config(self, analyzer_text):
        """Test the configuration handed to the runner"""
        config = lower(parse(analyzer_text)).run_config()
        assert (config.trials, config.seed, config.mode) == (400, 11, "apparatus")
        assert config.alpha == (0.6, 0.0)

    def test_swap_pipeline_on_b(self):
        """Test that Bob's swap program lowers to the swap circuit"""
        lowered = lower(parse((DATA / "swap.bench").read_text()))
        np.testing.assert_allclose(lowered.bob_op.matrix, swap_circuit(OamWindow(2)).matrix, atol=1e-12)

    def test_identity_bench(self):
        """Test that a bench without elements lowers to the identity"""
        lowered = lower(parse(SOURCE + "detect D1 A\n"))
        assert lowered.layout.n_paths == 1
        np.testing.assert_allclose(lowered.layout.unitary.matrix, np.eye(lowered.layout.unitary.dim))

    def test_run_config_needs_prepare(self):
        """Test that the runner needs an input state"""
        with pytest.raises(LoweringError, match="prepare"):
            lower(parse(SOURCE + "detect D1 A\n")).run_config()

    def test_leaking_pipeline(self):
        """Test that a bare sph pushes the edge charge out of the window"""
        with pytest.raises(LoweringError, match="outside the window"):
            lower(parse(SOURCE + "element A sph\ndetect D1 A\n"))

    def test_unnormalized_prepare(self):
        """Test that the prepared qubit must be normalized"""
        with pytest.raises(LoweringError, match="alpha"):
            lower(parse(SOURCE + "prepare A alpha=1.0+0.0i beta=1.0+0.0i\ndetect D1 A\n"))

    def test_nearly_normalized_prepare(self):
        """Test that the prepared qubit is checked at the package tolerance"""
        with pytest.raises(LoweringError, match="alpha"):
            lower(parse(SOURCE + "prepare A alpha=0.6000000001+0.0i beta=0.8+0.0i\ndetect D1 A\n"))

    def test_degenerate_profile(self):
        """Test that an unusable source profile is a lowering error"""
        with pytest.raises(LoweringError, match="source profile"):
            lower(parse("source spdc l=9 K=1 profile=delta\ndetect D1 A\n"))


class TestLayoutText:
    @pytest.mark.parametrize("convention", ["symmetric", "hadamard"])
    @pytest.mark.parametrize("K", [1, 2, 3])
    def test_analyzer_round_trip(self, convention, K):
        """Test that the printed analyzer lowers back to the same unitary and detectors"""
        reference = build_bell_analyzer(OamWindow(K), convention)
        lowered = lower(parse(layout_text(reference)))
        assert lowered.layout.n_paths == reference.n_paths
        assert lowered.layout.detector_paths == reference.detector_paths
        np.testing.assert_allclose(lowered.layout.unitary.matrix, reference.unitary.matrix, atol=1e-12)
        assert derive_detector_map(lowered.layout) == derive_detector_map(reference)

    def test_matches_bundled_file(self, analyzer_text):
        """Test that the printed analyzer is the bundled program up to path names"""
        printed = parse(layout_text(build_bell_analyzer(OamWindow(2))))
        bundled = parse(analyzer_text)
        names = {"A": "A", "odd": "a1", "ev": "a2", "ov": "a3"}

        def renamed(e):
            return e.model_copy(
                update={
                    "arm": names[e.arm],
                    "args": tuple(names[a] for a in e.args),
                    "outputs": tuple(names[o] for o in e.outputs),
                }
            )

        assert printed.elements == tuple(renamed(e) for e in bundled.elements)
        assert [(d.name, d.path) for d in printed.detectors] == [(d.name, names[d.path]) for d in bundled.detectors]

    def test_bob_pipeline(self):
        """Test that Bob's swap circuit prints as a merge and lowers back"""
        window = OamWindow(2)
        text = layout_text(build_bell_analyzer(window), bob=swap_circuit(window))
        assert "element B pbs b1 -> B" in text
        lowered = lower(parse(text))
        np.testing.assert_allclose(lowered.bob_op.matrix, swap_circuit(window).matrix, atol=1e-12)

    def test_corrections_on_bob(self):
        """Test that dp_sph and parity_phase print and lower back"""
        window = OamWindow(3)
        bob = compose([dp_sph(window), parity_phase(window, np.pi)])
        text = layout_text(build_bell_analyzer(window), bob=bob)
        assert "element B dp_sph" in text
        lowered = lower(parse(text))
        np.testing.assert_allclose(lowered.bob_op.matrix, bob.matrix, atol=1e-12)

    def test_source_prepare_and_run(self):
        """Test that the optional statements are carried into the program"""
        program = program_from_layout(
            build_bell_analyzer(OamWindow(2)),
            source=SourceDecl(l=1, K=2, profile=ProfileSpec(kind="gaussian", width=1.5)),
            prepare=PrepareDecl(alpha=(0.6, 0.0), beta=(0.0, 0.8)),
            run=RunDirective(trials=10, seed=3, mode="apparatus"),
        )
        assert parse(pretty_print(program)) == program
        assert lower(program).run_config().mode == "apparatus"

    def test_path_lit_by_no_element(self):
        """Test that a splitter fed from a path nothing routes light onto is refused"""
        window = OamWindow(2)
        layout = BenchLayout(window, 2, (bs_5050(window, 0, 1, 2),), (("D1", 0), ("D2", 1)))
        with pytest.raises(WiringError, match="no light"):
            program_from_layout(layout)

    def test_source_window_mismatch(self):
        """Test that the source must declare the layout's window"""
        with pytest.raises(WiringError, match="does not match"):
            program_from_layout(
                build_bell_analyzer(OamWindow(2)), source=SourceDecl(l=1, K=3, profile=ProfileSpec())
            )


_finite = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)
_single_arm = st.one_of(
    st.sampled_from(["dove", "sph", "sph(-1)", "dp_sph", "parity_phase(pi)"]),
    _finite.map(lambda a: f"hwp({a!r})"),
    _finite.map(lambda a: f"qwp({a!r})"),
    _finite.map(lambda a: f"delay({a!r})"),
    st.sampled_from(["hwp(pi/4)", "qwp(-pi/2)", "delay(pi)"]),
)


@st.composite
def bench_programs(draw):
    K = draw(st.integers(min_value=1, max_value=4))
    profile = draw(st.one_of(st.just("uniform"), st.floats(0.1, 5.0).map(lambda w: f"gaussian({w!r})")))
    lines = [f"source spdc l=1 K={K} profile={profile}"]
    if draw(st.booleans()):
        re_a, im_a, re_b, im_b = (draw(_finite) for _ in range(4))
        lines.append(
            f"prepare A alpha={format_complex((re_a, im_a))} beta={format_complex((re_b, im_b))}"
        )
    arms = ["A"]
    if draw(st.booleans()):
        lines.append("element A sorter -> A odd")
        arms.append("odd")
    for kind in draw(st.lists(_single_arm, max_size=5)):
        lines.append(f"element {draw(st.sampled_from(arms))} {kind}")
    if len(arms) == 2 and draw(st.booleans()):
        lines.append(f"element A {draw(st.sampled_from(['bs', 'bs(hadamard)']))} odd")
    for i, arm in enumerate(arms, start=1):
        lines.append(f"detect D{i} {arm}")
    if draw(st.booleans()):
        seed = draw(st.integers(0, 2**31))
        mode = draw(st.sampled_from(["projector", "apparatus"]))
        lines.append(f"run trials={draw(st.integers(0, 10**6))} seed={seed} mode={mode}")
    return "\n".join(lines) + "\n"


class TestProperties:
    @settings(max_examples=100, deadline=None)
    @given(bench_programs())
    def test_pretty_print_round_trip(self, text):
        """Test parse(pretty_print(p)) == p for generated programs"""
        program = parse(text)
        assert parse(pretty_print(program)) == program

    @settings(max_examples=200, deadline=None)
    @given(st.text())
    def test_arbitrary_text_fails_cleanly(self, text):
        """Test that any text parses or raises a positioned parse error"""
        try:
            parse(text)
        except BenchParseError as e:
            assert e.line >= 1 and e.column >= 1

    @settings(max_examples=200, deadline=None)
    @given(st.text(alphabet="ABDKelmnoprstuvi0123456789 =->()./+\n#", max_size=200))
    def test_near_miss_text_fails_cleanly(self, text):
        """Test the same on text built from the language's own characters"""
        try:
            parse(text)
        except BenchParseError as e:
            assert e.line >= 1 and e.column >= 1

    @settings(max_examples=100, deadline=None)
    @given(st.binary(max_size=200))
    def test_arbitrary_bytes_fail_cleanly(self, data):
        """Test undecodable and random bytes"""
        try:
            parse(data)
        except BenchParseError:
            pass

    def test_ten_thousand_random_byte_strings(self):
        """Test that 10000 seeded random byte strings parse or fail with a positioned error"""
        rng = np.random.default_rng(2024)
        words = [w.encode() for w in ("source", "spdc", "element", "detect", "run", "->", "K=2", "A", "\n", " ")]
        for i in range(10000):
            if i % 2:
                data = rng.integers(0, 256, size=int(rng.integers(0, 120)), dtype=np.uint8).tobytes()
            else:
                picks = rng.integers(0, len(words), size=int(rng.integers(0, 30)))
                data = b"".join(words[k] for k in picks)
            try:
                parse(data)
            except BenchParseError as e:
                assert e.line >= 1 and e.column >= 1
