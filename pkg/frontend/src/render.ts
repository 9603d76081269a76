/** Pure view: ConsoleState in, HTML string out. Handlers attach in main.ts. */
import type { ConsoleState } from "./state.js";
import { visibleAlerts } from "./state.js";
import { sparklineSvg } from "./sparkline.js";
import { POLICIES, SCENARIOS } from "./types.js";

function esc(text: string): string {
  return text.replace(/[&<>"']/g, (c) =>
    ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;", "'": "&#39;" })[c] ?? c,
  );
}

function tank(label: string, litres: number, capacity: number, extra = ""): string {
  const pct = Math.min(100, Math.max(0, (litres / capacity) * 100)).toFixed(1);
  return `<div class="tank ${extra}">
    <div class="tank-label">${label}</div>
    <div class="tank-shell"><div class="tank-fill" style="height:${pct}%"></div></div>
    <div class="tank-value">${litres.toFixed(2)} L</div>
  </div>`;
}

function badge(name: string, on: boolean, pending: boolean): string {
  return `<span class="badge ${on ? "on" : "off"} ${pending ? "pending" : ""}"
    data-badge="${name}">${name}${pending ? " &#8987;" : ""}</span>`;
}

function alertCards(state: ConsoleState): string {
  const cards = visibleAlerts(state)
    .slice(0, 8)
    .map((a) => {
      const rows = a.predictions
        .map(
          (p) => `<div class="pred"><b>${esc(p.label)}</b>
            <span class="prob">${(p.probability * 100).toFixed(2)}%</span></div>`,
        )
        .join("");
      return `<div class="card" data-event="${a.event_seq}">
        <div class="card-head">#${a.event_seq} &middot; t=${a.t_s.toFixed(1)}s &middot; ${esc(a.policy)}</div>
        ${rows}
        <div class="component">affected: ${esc(a.affected_component)}</div>
      </div>`;
    })
    .join("");
  return cards || `<div class="empty">no anomaly alerts</div>`;
}

export function renderDashboard(state: ConsoleState): string {
  const t = state.telemetry;
  const pendingFor = (actuator: string) =>
    state.pending.some((p) => p.actuator === actuator && !p.timedOut);

  const plant = t
    ? `<div class="tanks ${state.divergence ? "diverged" : ""}">
        ${tank("main", t.true_state.main_volume_l, 9)}
        ${tank("secondary (true)", t.true_state.secondary_volume_l, 7)}
        ${tank("secondary (sensed)", (t.sensed.ultrasound_step / 10000) * 7, 7,
               state.divergence ? "highlight" : "")}
      </div>
      <div class="badges">
        ${badge("pump1", t.true_state.pump1_on, pendingFor("pump1"))}
        ${badge("pump2", t.true_state.pump2_on, pendingFor("pump2"))}
        ${badge("pump1_valve", t.true_state.pump1_valve_open, pendingFor("valve:pump1_valve"))}
        ${badge("pump2_valve", t.true_state.pump2_valve_open, pendingFor("valve:pump2_valve"))}
        ${badge("drain_main", t.true_state.drain_main_open, pendingFor("valve:drain_main"))}
        ${badge("drain_secondary", t.true_state.drain_secondary_open, pendingFor("valve:drain_secondary"))}
      </div>
      <div class="depth">
        ${sparklineSvg(state.depthHistory)}
        <div class="depth-meta">
          reg4 ${t.sensed.ultrasound_step}
          &middot; rate ${state.rate === null ? "&ndash;" : state.rate.toFixed(1)} steps/s
          ${state.divergence ? '<span class="diverge-flag">sensed &ne; true</span>' : ""}
        </div>
      </div>
      <div class="scenario-line">scenario: <b>${esc(t.scenario)}</b>
        &middot; sim t=${t.t_s.toFixed(1)}s &middot; active policy ${esc(t.policy)}</div>`
    : `<div class="empty">waiting for telemetry&hellip;</div>`;

  const policyButtons = POLICIES.map(
    (p) => `<button class="policy ${state.selectedPolicy === p ? "active" : ""}
      ${state.pendingPolicyRequest && state.selectedPolicy === p ? "pending" : ""}"
      data-policy="${p}">${p}</button>`,
  ).join("");

  const scenarioOptions = SCENARIOS.map((s) => `<option value="${s}">${s}</option>`).join("");

  const toasts = state.errors
    .map((e) => `<div class="toast">${esc(e)}</div>`)
    .join("");

  return `<div class="console">
    <header>
      <span class="dot ${state.connected ? "live" : "dead"}"></span>
      watersiem operator console
      <span class="policies">${policyButtons}</span>
    </header>
    <section class="plant">${plant}</section>
    <section class="controls">
      <select id="scenario-pick">${scenarioOptions}</select>
      <button data-action="inject">inject</button>
      <button data-action="stop_pump1">stop pump1</button>
      <button data-action="stop_pump2">stop pump2</button>
      <button data-action="start_pump1">start pump1</button>
      <button data-action="start_pump2">start pump2</button>
      <button data-action="clear_scenario">clear scenario</button>
    </section>
    <section class="alerts">${alertCards(state)}</section>
    <div class="toasts">${toasts}</div>
  </div>`;
}
