import datetime as dt
import json
import logging

import pytest

from watersiem.errors import LogStructureError
from watersiem.logs import ColumnMapping, LogRow, PollLogger, make_rows, read_log, write_log
from watersiem.episode import run_episode
from watersiem.scenarios import ScenarioKind

BASE = dt.datetime(2018, 1, 1, 0, 0, 0)


def instance_rows(n=3, values=(0, 0, 192, 18, 3000, 0, 0, 0, 0, 0)):
    logger = PollLogger(BASE)
    rows = []
    for k in range(n):
        rows.extend(logger.tick(values, k))
    return rows


class TestPollLogger:
    def test_one_instance_is_ten_rows_register_0_to_9(self):
        rows = PollLogger(BASE).tick((1,) * 10, 0)
        assert [r.register for r in rows] == list(range(10))
        assert len({(r.date, r.time) for r in rows}) == 1

    def test_consecutive_ticks_are_a_tenth_second_apart(self):
        logger = PollLogger(BASE)
        first = logger.tick((0,) * 10, 0)[0]
        second = logger.tick((0,) * 10, 1)[0]
        delta = dt.datetime.combine(second.date, second.time) - \
            dt.datetime.combine(first.date, first.time)
        assert delta.total_seconds() == pytest.approx(0.1)

    def test_stale_repeat_keeps_values_with_fresh_timestamps(self):
        logger = PollLogger(BASE)
        logger.tick((0, 0, 192, 18, 3000, 0, 0, 0, 0, 0), 0)
        stale = logger.tick(None, 1)
        assert [r.value for r in stale] == [0, 0, 192, 18, 3000, 0, 0, 0, 0, 0]
        assert stale[0].time != BASE.time()

    def test_timeout_without_history_logs_zeros_and_warns(self, caplog):
        logger = PollLogger(BASE)
        with caplog.at_level(logging.WARNING):
            rows = logger.tick(None, 0)
        assert [r.value for r in rows] == [0] * 10
        assert any("no prior snapshot" in m for m in caplog.messages)

    def test_gap_mode_emits_nothing_on_timeout(self):
        logger = PollLogger(BASE, dos_mode="gap")
        logger.tick((1,) * 10, 0)
        assert logger.tick(None, 1) == []


class TestCsvRoundTrip:
    def test_write_read_round_trip(self, tmp_path):
        rows = instance_rows(5)
        path = write_log(rows, tmp_path / "log.csv")
        assert read_log(path) == rows

    def test_header_layout(self, tmp_path):
        path = write_log(instance_rows(1), tmp_path / "log.csv")
        first = path.read_text().splitlines()[0]
        assert first == "date,time,register,value"

    def test_broken_group_reports_line_number(self, tmp_path):
        rows = instance_rows(2)[:-1]  # drop one row of the second instance
        with pytest.raises(LogStructureError) as err:
            write_log(rows, tmp_path / "bad.csv")
        assert err.value.line_number == 12  # header + first full instance

    def test_read_validates_structure(self, tmp_path):
        path = write_log(instance_rows(2), tmp_path / "log.csv")
        lines = path.read_text().splitlines()
        (tmp_path / "bad.csv").write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(LogStructureError):
            read_log(tmp_path / "bad.csv")
        assert len(read_log(tmp_path / "bad.csv", validate=False)) == 19

    def test_round_trip_of_generated_episode(self, tmp_path):
        rows = run_episode(ScenarioKind.NORMAL, 50, seed=3)
        path = write_log(rows, tmp_path / "normal.csv")
        assert read_log(path) == rows


class TestColumnMapping:
    def test_reordered_foreign_layout_parses_identically(self, tmp_path):
        rows = instance_rows(3)
        native = write_log(rows, tmp_path / "native.csv")
        foreign = tmp_path / "foreign.csv"
        out_lines = ["Reg;Val;Date;Time"]
        for line in native.read_text().splitlines()[1:]:
            date, time_, reg, val = line.split(",")
            out_lines.append(";".join([reg, val, date, time_]))
        foreign.write_text("\n".join(out_lines) + "\n")
        mapping = ColumnMapping(date="Date", time="Time", register="Reg", value="Val",
                                delimiter=";")
        assert read_log(foreign, mapping) == rows

    def test_mapping_from_config_file(self, tmp_path):
        config = {"columns": {"date": "D", "time": "T", "register": "R", "value": "V"},
                  "delimiter": "|", "scenario_by_file": {"x.csv": "spoofing"}}
        path = tmp_path / "mapping.json"
        path.write_text(json.dumps(config))
        mapping = ColumnMapping.from_file(path)
        assert (mapping.date, mapping.delimiter) == ("D", "|")
        assert mapping.scenario_by_file == {"x.csv": "spoofing"}

    def test_missing_column_is_reported(self, tmp_path):
        path = write_log(instance_rows(1), tmp_path / "log.csv")
        with pytest.raises(LogStructureError, match="missing"):
            read_log(path, ColumnMapping(register="RegisterNumber"))


class TestDosEpisode:
    def test_thirty_second_outage_leaves_300_stale_instances(self):
        rows = run_episode(ScenarioKind.DOS, 310, seed=5)
        by_tick = [rows[i:i + 10] for i in range(0, len(rows), 10)]
        reg4 = [group[4].value for group in by_tick]
        stale = reg4[10:]
        assert len(stale) == 300
        assert len(set(stale)) == 1  # frozen from dos_start_tick on
        stamps = [(g[0].date, g[0].time) for g in by_tick]
        assert len(set(stamps)) == 310  # timestamps keep advancing

    def test_gap_mode_shortens_the_file(self):
        from watersiem.config import EpisodeConfig

        rows = run_episode(ScenarioKind.DOS, 60, seed=5,
                           episodes=EpisodeConfig(dos_mode="gap"))
        assert len(rows) == 10 * 10  # only the pre-attack polls
