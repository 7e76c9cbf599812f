import pytest
from dataclasses import replace
from hypothesis import given, settings
from hypothesis import strategies as st

from bdris import (
    ArchitectureKind,
    ConfigError,
    LinkBudget,
    Mode,
    default_config,
    parse_config,
    serialize_config,
    square_grid,
    system_architecture,
)
from bdris.config import SystemConfig
from bdris.optimizer import ArmijoOptions, OptimOptions


class TestDefaults:
    def test_empty_file_yields_documented_defaults(self):
        cfg = parse_config("")
        assert cfg.system.elements == (32,)
        assert cfg.system.num_ues == 10
        assert cfg.system.num_rbs == 10
        assert cfg.system.architecture is ArchitectureKind.FULLY_CONNECTED
        assert cfg.system.mode is Mode.TRANSMISSIVE
        assert cfg.pt_dbm == (20.0, 25.0, 30.0)
        assert cfg.realizations == 100
        assert cfg.frameworks == ("bdris", "dris")
        assert cfg.scenario.rician_factor_db == 5.0
        assert cfg.scenario.carrier_hz == 28e9
        assert cfg.scenario.link_budget is LinkBudget.NORMALIZED
        assert cfg.scenario.noise_mw == pytest.approx(20000.0)
        assert cfg.scenario.array.num_elements == 32
        assert cfg.optimizer == OptimOptions()

    def test_comments_and_blanks_ignored(self):
        cfg = parse_config("# top comment\n\n[system]\nues = 4  # inline\nrbs = 6\n")
        assert cfg.system.num_ues == 4
        assert cfg.system.num_rbs == 6
        assert cfg.scenario.num_ues == 4


class TestErrors:
    def test_unknown_key_reports_line(self):
        text = "[system]\nues = 4\nbogus = 1\n"
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        (issue,) = exc.value.issues
        assert issue.line == 3
        assert "bogus" in issue.message

    def test_unknown_section_reports_line(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("[system]\nues = 4\n\n[mystery]\nx = 1\n")
        (issue,) = exc.value.issues
        assert issue.line == 4
        assert "mystery" in issue.message

    def test_group_size_not_integral(self):
        text = "[system]\nelements = 30\narchitecture = group\ngroups = 4\n"
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        (issue,) = exc.value.issues
        assert "group size not integral" in issue.message
        assert issue.line == 2

    def test_more_users_than_blocks(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("[system]\nues = 12\nrbs = 10\n")
        assert "exceed" in str(exc.value)

    def test_groups_key_outside_group_architecture(self):
        with pytest.raises(ConfigError):
            parse_config("[system]\narchitecture = fully\ngroups = 4\n")

    def test_bad_enum_value(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("[system]\nmode = sideways\n")
        assert "sideways" in str(exc.value)

    def test_bad_number(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("[experiment]\nrealizations = many\n")
        assert "many" in str(exc.value)

    def test_multiple_issues_collected(self):
        text = "[system]\nbogus = 1\nmode = sideways\n"
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert len(exc.value.issues) == 2

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("[system]\nues = 4\nues = 5\n")

    def test_unknown_framework(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("[experiment]\nframeworks = bdris ghost\n")
        assert "ghost" in str(exc.value)


class TestRoundTrip:
    def test_default_round_trip(self):
        cfg = default_config()
        assert parse_config(serialize_config(cfg)) == cfg

    def test_modified_round_trip(self):
        text = """
[system]
elements = 8 16 24
architecture = group
groups = 4
ues = 6
rbs = 8

[power]
pt_dbm = 17.5 23

[channel]
rician_db = 7.25
link_budget = physical

[experiment]
realizations = 3
base_seed = 99
frameworks = dris
"""
        cfg = parse_config(text)
        assert cfg.system.elements == (8, 16, 24)
        assert cfg.system.groups == 4
        assert cfg.pt_dbm == (17.5, 23.0)
        assert cfg.scenario.link_budget is LinkBudget.PHYSICAL
        assert parse_config(serialize_config(cfg)) == cfg

    @settings(max_examples=40, deadline=None)
    @given(
        ues=st.integers(1, 10),
        extra_rbs=st.integers(0, 5),
        elements=st.lists(st.sampled_from([4, 8, 12, 16, 24, 32]), min_size=1, max_size=4),
        pts=st.lists(st.floats(-10, 40, allow_nan=False), min_size=1, max_size=4),
        rician=st.floats(-20, 30, allow_nan=False),
        radius=st.floats(1e-3, 1e4, allow_nan=False, exclude_min=True),
        seed=st.integers(-(2**31), 2**31),
        realizations=st.integers(1, 500),
        mode=st.sampled_from(list(Mode)),
        budget=st.sampled_from(list(LinkBudget)),
        inner_tol=st.floats(1e-12, 1e-2, allow_nan=False, exclude_min=True),
    )
    def test_round_trip_property(
        self, ues, extra_rbs, elements, pts, rician, radius, seed, realizations, mode, budget, inner_tol
    ):
        base = default_config()
        cfg = replace(
            base,
            system=replace(
                base.system,
                elements=tuple(dict.fromkeys(elements)),
                num_ues=ues,
                num_rbs=ues + extra_rbs,
                mode=mode,
            ),
            scenario=replace(
                base.scenario,
                num_ues=ues,
                ue_radius=radius,
                rician_factor_db=rician,
                link_budget=budget,
                array=square_grid(tuple(dict.fromkeys(elements))[0]),
            ),
            pt_dbm=tuple(dict.fromkeys(pts)),
            base_seed=seed,
            realizations=realizations,
            optimizer=replace(base.optimizer, inner_rel_tol=inner_tol),
        )
        assert parse_config(serialize_config(cfg)) == cfg


class TestArchitectureMapping:
    def test_system_architecture(self):
        assert system_architecture(SystemConfig()).kind is ArchitectureKind.FULLY_CONNECTED
        single = SystemConfig(architecture=ArchitectureKind.SINGLE_CONNECTED)
        assert system_architecture(single).num_groups(8) == 8
        grouped = SystemConfig(architecture=ArchitectureKind.GROUP_CONNECTED, groups=4)
        assert system_architecture(grouped).num_groups(16) == 4
