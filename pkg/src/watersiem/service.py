"""Live loop: simulate, serve registers, poll, classify windows, alert.

One asyncio task owns the plant and advances it at the poll cadence
(optionally faster than wall clock). Every tick publishes an immutable
register snapshot, appends the polled instance to the sliding window, and
once eleven instances exist classifies the newest one and emits an alert
whenever the report changes. Telemetry carries both the true plant state
and the sensed registers so a console can show spoofing divergence.

Operator messages arrive over the WebSocket: ``inject`` swaps the active
scenario, ``mitigate`` applies one corrective action ahead of the next
control cycle, ``set_policy`` switches the alerting policy. Every applied
action is acknowledged with the resulting state; malformed messages are
rejected with a reason and never disturb the loop.
"""
from __future__ import annotations

import asyncio
import collections
import contextlib
import datetime as dt
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .config import EpisodeConfig, InjectionParams, PlantParams
from .episode import initial_state
from .errors import ProtocolError, ServiceError, WatersiemError
from .evaluate import AlertEmitter, AlertPolicy, infer_model_task, make_report
from .inject import ScenarioInjector
from .logs import PollLogger
from .models import load_model
from .models.base import Model
from .pipeline import FEATURE_NAMES, MinMaxScaler, load_sidecar
from .plant import ActuatorCommand, apply_mitigation, plc_control, read_true_sensors, step
from .modbus import ModbusClient, RegisterServer, SnapshotBus
from .registers import encode_registers, unpack_reg2, unpack_reg3
from .scenarios import MitigationAction, MitigationKind, ScenarioKind
from .pipeline import RATE_LAG

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect


@dataclass(frozen=True)
class ServiceConfig:
    model_path: str
    policy: AlertPolicy = AlertPolicy("top2")
    seed: int = 0
    speed: float = 1.0
    modbus_port: int = 1502
    poll_via_tcp: bool = False
    schedule: tuple[tuple[float, ScenarioKind], ...] = ()
    plant: PlantParams = field(default_factory=PlantParams)
    injection: InjectionParams = field(default_factory=InjectionParams)
    episodes: EpisodeConfig = field(default_factory=EpisodeConfig)
    alert_repeat_ticks: int = 10
    ring_buffer: int = 2000

    def __post_init__(self):
        if self.speed <= 0:
            raise ValueError("speed must be positive")
        times = [t for t, _ in self.schedule]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("schedule times must be strictly increasing")


class LiveService:
    """Owns the plant, the model, and the message fan-out."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        model_path = Path(config.model_path)
        if not model_path.exists():
            raise ServiceError(f"model file not found: {model_path}")
        self.model: Model = load_model(model_path)
        sidecar_path = model_path.with_suffix(".pipeline.json")
        if not sidecar_path.exists():
            raise ServiceError(f"pipeline sidecar not found next to the model: {sidecar_path}")
        self.scaler, sidecar = load_sidecar(sidecar_path)
        self.feature_names: list[str] = sidecar["feature_names"]
        self.task = infer_model_task(self.model)
        if self.config.policy.task != self.task:
            raise ServiceError(
                f"policy {self.config.policy.describe()} needs a {self.config.policy.task} model, "
                f"got one trained on {self.task} labels")

        self.policy = config.policy
        self.plant_params = config.plant
        self.state = initial_state(ScenarioKind.NORMAL, config.seed, config.plant, config.episodes)
        self.cmd = ActuatorCommand()
        self.injector = ScenarioInjector(config.seed, config.injection, config.plant.poll_dt_s)
        base_dt = dt.datetime.fromisoformat(config.episodes.base_datetime)
        self.poll_logger = PollLogger(base_dt, config.plant.poll_dt_s, config.episodes.dos_mode)
        self.emitter = AlertEmitter(base_dt)
        self.tick_count = 0
        self.alerts_emitted = 0
        self.seq = 0
        self._window: collections.deque = collections.deque(maxlen=RATE_LAG + 1)
        self._last_sensed = None
        self._last_alert_key = None
        self._last_alert_tick = -10**9
        self._pending: list[dict] = []
        self._schedule = list(config.schedule)
        self.ring: collections.deque = collections.deque(maxlen=config.ring_buffer)
        self.subscribers: list[asyncio.Queue] = []
        self.bus = SnapshotBus()
        self.server: RegisterServer | None = None
        self.client: ModbusClient | None = None
        if config.poll_via_tcp:
            try:
                self.server = RegisterServer(self.bus, port=config.modbus_port)
            except ProtocolError as exc:
                raise ServiceError(f"cannot bind modbus port: {exc}") from exc
            self.server.start()
            self.client = ModbusClient(port=config.modbus_port, timeout_s=1.0)

    # ------------------------------------------------------------------ loop

    def submit(self, message: dict) -> None:
        """Queue one operator message for the next control cycle."""
        self._pending.append(message)

    def tick(self) -> list[dict]:
        """Advance one poll period; returns the messages this tick produced."""
        t_next = self.state.t_s + self.plant_params.poll_dt_s
        while self._schedule and self._schedule[0][0] <= t_next:
            _, scenario = self._schedule.pop(0)
            self._activate(scenario)
        acks = [self._apply_operator(m) for m in self._pending]
        self._pending.clear()

        self.state = step(self.state, self.plant_params, self.cmd, self.plant_params.poll_dt_s)
        true_reading = read_true_sensors(self.state, self.plant_params)
        sensed = self.injector.apply(true_reading, self.state.t_s)
        self._last_sensed = sensed
        self.cmd = plc_control(sensed, self.cmd, self.plant_params)
        rf = encode_registers(sensed, self.cmd)
        self.bus.publish(rf)

        dos = self.injector.scenario is ScenarioKind.DOS
        if self.server is not None:
            self.server.drop_requests = dos
        values = self._poll(rf, dos)
        rows = self.poll_logger.tick(values, self.tick_count)
        logged = [r.value for r in rows] if rows else None
        messages: list[dict] = [self._telemetry(true_reading, sensed, logged)]
        if rows:
            self._window.append((rows[2].value, rows[3].value, rows[4].value, self.state.t_s))
            alert = self._classify()
            if alert is not None:
                messages.append(alert)
        messages.extend(acks)
        self.tick_count += 1
        for message in messages:
            self.ring.append(message)
        return messages

    def _poll(self, rf, dos: bool):
        if dos:
            return None  # request times out; logger replays stale values
        if self.client is not None:
            try:
                return self.client.read_holding(0, 10)
            except (TimeoutError, WatersiemError, OSError):
                return None
        return rf.regs

    def _classify(self) -> dict | None:
        if len(self._window) < RATE_LAG + 1:
            return None
        reg2, reg3, reg4, t_now = self._window[-1]
        _, _, reg4_past, t_past = self._window[0]
        if t_now <= t_past:
            return None
        s0, s1, s2, s3 = unpack_reg2(reg2)
        pump1, pump2, p1v, p2v = unpack_reg3(reg3)
        full = dict(zip(FEATURE_NAMES,
                        (s0, s1, s2, s3, pump1, pump2, p1v, p2v,
                         float(reg4), (reg4 - reg4_past) / (t_now - t_past))))
        x = np.array([[full[name] for name in self.feature_names]])
        proba = self.model.predict_proba(self.scaler.transform(x))[0]
        report = make_report(proba, self.policy, self.state.t_s, self.model.classes_)
        key = (report.labels, report.is_anomaly, self.policy.describe())
        repeat_due = self.tick_count - self._last_alert_tick >= self.config.alert_repeat_ticks
        if key == self._last_alert_key and not (report.is_anomaly and repeat_due):
            return None
        self._last_alert_key = key
        self._last_alert_tick = self.tick_count
        self.alerts_emitted += 1
        return self._message("alert", self.emitter.emit(report))

    def _telemetry(self, true_reading, sensed, logged: list[int] | None) -> dict:
        s = self.state
        return self._message("telemetry", {
            "t_s": round(s.t_s, 3),
            "scenario": self.injector.scenario.value,
            "policy": self.policy.describe(),
            "true_state": {
                "main_volume_l": round(s.main_volume_l, 4),
                "secondary_volume_l": round(s.secondary_volume_l, 4),
                "recovery_volume_l": round(s.recovery_volume_l, 4),
                "pump1_on": s.pump1_on, "pump2_on": s.pump2_on,
                "pump1_valve_open": s.pump1_valve_open, "pump2_valve_open": s.pump2_valve_open,
                "drain_main_open": s.drain_main_open, "drain_secondary_open": s.drain_secondary_open,
                "true_ultrasound_step": true_reading.ultrasound_step,
                "true_bits": list(true_reading.discrete_bits),
            },
            "sensed": {
                "bits": list(sensed.discrete_bits),
                "ultrasound_step": sensed.ultrasound_step,
            },
            # what the poller recorded this tick: stale under DoS, null in gap mode
            "registers": logged,
        })

    def _message(self, kind: str, payload: dict) -> dict:
        self.seq += 1
        return {"type": kind, "seq": self.seq, "payload": payload}

    # ------------------------------------------------------- operator actions

    def _activate(self, scenario: ScenarioKind) -> None:
        reading = self._last_sensed or read_true_sensors(self.state, self.plant_params)
        self.injector.activate(scenario, reading, self.state.t_s)

    def _apply_operator(self, message: dict) -> dict:
        request_id = message.get("request_id") if isinstance(message, dict) else None

        def nack(reason: str) -> dict:
            return self._message("ack", {"request_id": request_id, "ok": False, "reason": reason})

        if not isinstance(message, dict) or not isinstance(message.get("type"), str):
            return nack("message must be an object with a string 'type'")
        kind = message["type"]
        if kind == "invalid_json":
            return nack(f"invalid JSON: {message.get('payload', {}).get('error', '')}")
        payload = message.get("payload")
        if not isinstance(payload, dict):
            return nack("missing 'payload' object")
        try:
            if kind == "inject":
                scenario = ScenarioKind(payload["scenario"])
                self._activate(scenario)
                result = {"scenario": scenario.value}
            elif kind == "mitigate":
                action = MitigationAction(MitigationKind(payload["action"]),
                                          payload.get("target"))
                self.state, new_scenario = apply_mitigation(self.state, self.injector.scenario,
                                                            action)
                if new_scenario is ScenarioKind.NORMAL and \
                        self.injector.scenario is not ScenarioKind.NORMAL:
                    self.injector.clear()
                self.cmd = self.state.command()
                result = {
                    "scenario": self.injector.scenario.value,
                    "pump1_on": self.state.pump1_on, "pump2_on": self.state.pump2_on,
                    "pump1_valve_open": self.state.pump1_valve_open,
                    "pump2_valve_open": self.state.pump2_valve_open,
                    "drain_main_open": self.state.drain_main_open,
                    "drain_secondary_open": self.state.drain_secondary_open,
                }
            elif kind == "set_policy":
                tau = payload.get("tau")
                policy = AlertPolicy(payload["policy"], float(tau) if tau is not None else None)
                if policy.task != self.task:
                    return nack(f"policy needs a {policy.task} model, this service runs {self.task}")
                self.policy = policy
                self._last_alert_key = None  # re-report under the new policy
                result = {"policy": self.policy.describe()}
            else:
                return nack(f"unknown message type {kind!r}")
        except (KeyError, ValueError, TypeError) as exc:
            return nack(f"invalid {kind} payload: {exc}")
        return self._message("ack", {"request_id": request_id, "ok": True, "result": result})

    # ---------------------------------------------------------------- running

    def run_scripted(self, n_ticks: int) -> list[dict]:
        """Headless deterministic run; returns every message in order."""
        out: list[dict] = []
        for _ in range(n_ticks):
            out.extend(self.tick())
        return out

    async def run(self, stop: asyncio.Event | None = None) -> None:
        period = self.plant_params.poll_dt_s / self.config.speed
        while stop is None or not stop.is_set():
            for message in self.tick():
                self._broadcast(message)
            await asyncio.sleep(period)

    def _broadcast(self, message: dict) -> None:
        for queue in list(self.subscribers):
            if queue.full():
                with contextlib.suppress(asyncio.QueueEmpty):
                    queue.get_nowait()
            queue.put_nowait(message)

    def metrics(self) -> dict:
        return {
            "ticks": self.tick_count,
            "sim_time_s": round(self.state.t_s, 3),
            "alerts_emitted": self.alerts_emitted,
            "scenario": self.injector.scenario.value,
            "policy": self.policy.describe(),
            "subscribers": len(self.subscribers),
            "model": self.model.algorithm,
            "task": self.task,
        }

    def close(self) -> None:
        if self.client is not None:
            self.client.close()
        if self.server is not None:
            self.server.stop()


def build_app(service: LiveService):
    @contextlib.asynccontextmanager
    async def lifespan(app):
        stop = asyncio.Event()
        loop_task = asyncio.create_task(service.run(stop))
        yield
        stop.set()
        loop_task.cancel()
        with contextlib.suppress(asyncio.CancelledError):
            await loop_task
        service.close()

    app = FastAPI(title="watersiem", lifespan=lifespan)
    app.state.service = service

    @app.get("/health")
    async def health() -> dict:
        return {"status": "ok", "model": service.model.algorithm,
                "task": service.task, "sim_time_s": round(service.state.t_s, 3)}

    @app.get("/metrics")
    async def metrics() -> dict:
        return service.metrics()

    @app.websocket("/ws")
    async def ws(websocket: WebSocket, since: int = 0) -> None:
        await websocket.accept()
        queue: asyncio.Queue = asyncio.Queue(maxsize=4096)
        for message in list(service.ring):
            if message["seq"] > since:
                queue.put_nowait(message)
        service.subscribers.append(queue)

        async def pump_out() -> None:
            while True:
                await websocket.send_json(await queue.get())

        sender = asyncio.create_task(pump_out())
        try:
            while True:
                text = await websocket.receive_text()
                try:
                    message = json.loads(text)
                except json.JSONDecodeError as exc:
                    service.submit({"type": "invalid_json", "payload": {"error": str(exc)}})
                    continue
                service.submit(message)
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sender
            if queue in service.subscribers:
                service.subscribers.remove(queue)

    return app
