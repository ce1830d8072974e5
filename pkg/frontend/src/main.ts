/** DOM wiring for the operator console; all state lives in the view model. */

import { ApiClient } from "./client.js";
import { ConsoleViewModel, cssColor } from "./model.js";
import { MODIFIERS } from "./types.js";
import type { RunRecordDto } from "./types.js";

const POLL_INTERVAL_MS = 500;

const vm = new ConsoleViewModel(new ApiClient());

const $ = (id: string) => document.getElementById(id)!;

function renderSwatches(record: RunRecordDto | null): void {
  const triptych: [string, [number, number, number] | null][] = [
    ["swatch-target", record ? record.target : null],
    ["swatch-predicted", record ? record.plan.predicted : null],
    ["swatch-achieved", record ? record.achieved : null],
  ];
  for (const [id, rgb] of triptych) {
    const el = $(id);
    el.style.background = rgb ? cssColor(rgb) : "transparent";
    el.title = rgb ? rgb.map((c) => c.toFixed(3)).join(", ") : "";
  }
  const badge = $("matched-badge");
  if (record) {
    badge.textContent = record.matched ? "matched" : "missed";
    badge.className = record.matched ? "badge ok" : "badge miss";
  } else {
    badge.textContent = "";
    badge.className = "badge";
  }
  $("run-detail").textContent = record
    ? `#${record.id} ${record.request_text} | residual ${record.plan.residual.toFixed(4)} | ` +
      `${record.result.total_ml.toFixed(2)} ml in ${record.result.duration_s.toFixed(1)} s | ` +
      `${record.provenance}`
    : "no run yet";
  $("program-text").textContent = record ? record.program_text : "";
}

function renderGauges(): void {
  const state = vm.deviceState;
  const host = $("gauges");
  host.innerHTML = "";
  if (!state) return;
  state.reservoirs.forEach((res, i) => {
    const row = document.createElement("div");
    row.className = "gauge";
    const label = document.createElement("span");
    label.textContent = `pump ${i + 1}: ${res.toFixed(1)} ml @ ${state.setpoints[i].toFixed(1)} V`;
    const bar = document.createElement("progress");
    bar.max = 100;
    bar.value = res;
    row.append(label, bar);
    host.append(row);
  });
  $("busy-indicator").className = state.busy ? "badge busy" : "badge hidden";
}

function renderHistory(): void {
  const host = $("history");
  host.innerHTML = "";
  for (const record of vm.history) {
    const row = document.createElement("li");
    const dot = document.createElement("span");
    dot.className = "dot";
    dot.style.background = cssColor(record.achieved);
    const text = document.createElement("span");
    text.textContent = `#${record.id} ${record.request_text} ${record.matched ? "✓" : "✗"}`;
    row.append(dot, text);
    row.onclick = () => {
      vm.current = record;
      render();
    };
    host.append(row);
  }
}

function render(): void {
  renderSwatches(vm.current);
  renderGauges();
  renderHistory();

  ($("submit") as HTMLButtonElement).disabled = !vm.canSubmit;
  for (const m of MODIFIERS) {
    ($(`adjust-${m}`) as HTMLButtonElement).disabled = !vm.canAdjust;
  }
  $("offline-badge").className = vm.offline ? "badge offline" : "badge hidden";
  const banner = $("error-banner");
  if (vm.banner) {
    banner.textContent = `${vm.banner.code}: ${vm.banner.message}`;
    banner.className = "banner";
  } else {
    banner.textContent = "";
    banner.className = "banner hidden";
  }
}

function wire(): void {
  const input = $("request-input") as HTMLInputElement;
  input.oninput = () => {
    vm.requestText = input.value;
    render();
  };
  ($("request-form") as HTMLFormElement).onsubmit = async (ev) => {
    ev.preventDefault();
    await vm.submit();
    await vm.pollState();
    render();
  };
  for (const m of MODIFIERS) {
    ($(`adjust-${m}`) as HTMLButtonElement).onclick = async () => {
      await vm.adjust(m);
      await vm.pollState();
      render();
    };
  }
  setInterval(async () => {
    // keep gauges live while a dispense is running; one cheap poll
    // otherwise so the offline badge stays honest
    await vm.pollState();
    render();
  }, POLL_INTERVAL_MS);
}

wire();
void (async () => {
  await vm.loadHistory();
  await vm.pollState();
  render();
})();
