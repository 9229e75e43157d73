import init, { problemNames, integrateTrace, gradientCheck, Trainer } from "./pkg/afge_demo.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c"];

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
}

function scaler(lo, hi, a, b) {
  const span = hi - lo || 1;
  return (v) => a + ((v - lo) / span) * (b - a);
}

function extent(values) {
  let lo = Infinity, hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  }
  return [lo, hi];
}

function polyline(ctx, xs, ys, sx, sy, color, dash = []) {
  ctx.strokeStyle = color;
  ctx.setLineDash(dash);
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(ys[i])) : ctx.moveTo(sx(x), sy(ys[i]))));
  ctx.stroke();
  ctx.setLineDash([]);
}

function label(ctx, text, x, y) {
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  ctx.fillText(text, x, y);
}

// --- step trace ---------------------------------------------------------------

function drawTrace(r) {
  const pad = 30;
  const sol = $("tr-solution").getContext("2d");
  const { width: w, height: h } = $("tr-solution");
  axes(sol, w, h, pad);
  const all = r.y.flat().concat(r.exact ? r.exact.flat() : []);
  const [lo, hi] = extent(all);
  const sx = scaler(r.t[0], r.t[r.t.length - 1], pad, w - pad);
  const sy = scaler(lo, hi, h - pad, pad);
  for (let k = 0; k < r.dim; k++) {
    polyline(sol, r.t, r.y.map((v) => v[k]), sx, sy, COLORS[k % 3]);
    if (r.exact) polyline(sol, r.t, r.exact.map((v) => v[k]), sx, sy, "#000", [4, 4]);
  }
  label(sol, `y(t)${r.exact ? "  (dashed: closed form)" : ""}`, pad + 4, pad - 8);
  label(sol, `[${lo.toPrecision(3)}, ${hi.toPrecision(3)}]`, w - pad - 110, pad - 8);

  const st = $("tr-steps").getContext("2d");
  const { width: w2, height: h2 } = $("tr-steps");
  axes(st, w2, h2, pad);
  const logs = r.steps.map((s) => Math.log10(s.h));
  const [llo, lhi] = extent(logs);
  const sy2 = scaler(llo - 0.1, lhi + 0.1, h2 - pad, pad);
  const acc = r.steps.filter((s) => s.accepted);
  polyline(st, acc.map((s) => s.t), acc.map((s) => Math.log10(s.h)), sx, sy2, "#1f77b4");
  st.fillStyle = "#d62728";
  for (const s of r.steps) {
    if (!s.accepted) st.fillRect(sx(s.t) - 2, sy2(Math.log10(s.h)) - 2, 4, 4);
  }
  label(st, "log10 h (red: rejected attempts)", pad + 4, pad - 8);

  $("tr-status").textContent =
    `${r.n_accepted} accepted, ${r.n_rejected} rejected, ${r.n_field_evals} field evaluations ` +
    `(1 + 4 per attempt)`;
}

function runTrace() {
  try {
    const r = JSON.parse(integrateTrace($("tr-problem").value, +$("tr-eps").value, +$("tr-h0").value, +$("tr-t1").value));
    drawTrace(r);
  } catch (e) {
    $("tr-status").textContent = `error: ${e.message ?? e}`;
  }
}

// --- gradient check -----------------------------------------------------------

function runGrad() {
  try {
    const r = JSON.parse(gradientCheck($("gc-problem").value, +$("gc-t1").value));
    const rows = r.rows
      .map((g) => `<tr><td>${g.index}</td><td>${g.afge.toPrecision(10)}</td><td>${g.fd.toPrecision(10)}</td><td>${g.rel_err.toExponential(2)}</td></tr>`)
      .join("");
    $("gc-table").innerHTML =
      `<table><tr><th>parameter</th><th>sensitivity</th><th>finite difference</th><th>rel. error</th></tr>${rows}</table>`;
    $("gc-status").textContent =
      `max relative error ${r.max_rel_err.toExponential(2)}; one forward pass of ${r.sensitivity_steps} steps ` +
      `vs ${2 * r.rows.length} extra integrations for the finite differences`;
  } catch (e) {
    $("gc-status").textContent = `error: ${e.message ?? e}`;
  }
}

// --- training -----------------------------------------------------------------

const EXTENT = 3.5;
const GRID = 48;
let trainer = null;
let history = [];
let busy = false;

function resetTrainer() {
  try {
    trainer?.free();
    trainer = new Trainer($("tn-task").value, +$("tn-seed").value, +$("tn-n").value, +$("tn-lr").value);
    history = [];
    drawTraining();
  } catch (e) {
    trainer = null;
    $("tn-status").textContent = `error: ${e.message ?? e}`;
  }
}

function drawTraining() {
  const ctx = $("tn-map").getContext("2d");
  const { width: w, height: h } = $("tn-map");
  const grid = trainer.probabilityGrid(GRID, EXTENT);
  const cell = w / GRID;
  for (let r = 0; r < GRID; r++) {
    for (let c = 0; c < GRID; c++) {
      const p = grid[r * GRID + c];
      ctx.fillStyle = `rgb(${Math.round(120 + 135 * p)}, ${Math.round(170 - 40 * Math.abs(p - 0.5))}, ${Math.round(255 - 135 * p)})`;
      ctx.fillRect(c * cell, r * cell, cell + 1, cell + 1);
    }
  }
  const sx = scaler(-EXTENT, EXTENT, 0, w);
  const sy = scaler(-EXTENT, EXTENT, h, 0);
  for (const [x, y, l] of JSON.parse(trainer.pointsJson())) {
    ctx.fillStyle = l ? "#b00" : "#006";
    ctx.beginPath();
    ctx.arc(sx(x), sy(y), 3, 0, 2 * Math.PI);
    ctx.fill();
  }

  const cv = $("tn-curve").getContext("2d");
  const { width: cw, height: ch } = $("tn-curve");
  const pad = 30;
  axes(cv, cw, ch, pad);
  if (history.length) {
    const xs = history.map((e) => e.epoch);
    const sx2 = scaler(0, Math.max(...xs), pad, cw - pad);
    polyline(cv, xs, history.map((e) => e.accuracy), sx2, scaler(0, 1, ch - pad, pad), "#2ca02c");
    const [, lhi] = extent(history.map((e) => e.mean_loss));
    polyline(cv, xs, history.map((e) => e.mean_loss), sx2, scaler(0, lhi, ch - pad, pad), "#d62728");
  }
  label(cv, "accuracy (green), mean loss (red, own scale)", pad + 4, pad - 8);
  const last = history[history.length - 1];
  $("tn-status").textContent = last
    ? `epoch ${last.epoch}: loss ${last.mean_loss.toFixed(4)}, accuracy ${(100 * last.accuracy).toFixed(1)}%, ` +
      `${last.mean_steps.toFixed(1)} adaptive steps per sample`
    : "untrained";
}

async function trainTen() {
  if (!trainer || busy) return;
  busy = true;
  for (let i = 0; i < 10; i++) {
    history.push(...JSON.parse(trainer.runEpochs(1)));
    drawTraining();
    await new Promise((r) => setTimeout(r, 0));
  }
  busy = false;
}

await init();
for (const name of JSON.parse(problemNames())) {
  $("tr-problem").add(new Option(name, name, name === "vdp", name === "vdp"));
}
$("tr-run").onclick = runTrace;
$("gc-run").onclick = runGrad;
$("tn-reset").onclick = resetTrainer;
$("tn-step").onclick = trainTen;
runTrace();
resetTrainer();
