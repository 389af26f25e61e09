import init, { prox_field, prox_point, penalty_curve, objective_trace } from "./pkg/sdca_demo.js";

const $ = (id) => document.getElementById(id);

function bindRange(id, onChange) {
  const input = $(id);
  const out = $(id + "-out");
  const update = () => {
    out.textContent = Number(input.value).toFixed(2);
    onChange();
  };
  input.addEventListener("input", update);
  out.textContent = Number(input.value).toFixed(2);
}

function axes(ctx, w, h, pad) {
  ctx.strokeStyle = "#999";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, h - pad);
  ctx.stroke();
}

// Proximal map

const EXTENT = 3;
const STEPS = 21;

function proxParams() {
  return { q: $("prox-q").value, c: Number($("prox-c").value), rho: Number($("prox-rho").value) };
}

function drawProx() {
  const canvas = $("prox-canvas");
  const ctx = canvas.getContext("2d");
  const { q, c, rho } = proxParams();
  const size = canvas.width;
  const toPx = (x, y) => [((x + EXTENT) / (2 * EXTENT)) * size, ((EXTENT - y) / (2 * EXTENT)) * size];
  ctx.clearRect(0, 0, size, size);

  // Zero region on a fine grid.
  const fine = 92;
  const cell = size / fine;
  ctx.fillStyle = "#e8eef8";
  for (let r = 0; r < fine; r++) {
    for (let s = 0; s < fine; s++) {
      const ux = -EXTENT + (s + 0.5) * cell * (2 * EXTENT) / size;
      const uy = EXTENT - (r + 0.5) * cell * (2 * EXTENT) / size;
      const w = prox_point(ux, uy, c, rho, q);
      if (w[0] === 0 && w[1] === 0) ctx.fillRect(s * cell, r * cell, cell + 0.5, cell + 0.5);
    }
  }

  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  ctx.moveTo(size / 2, 0); ctx.lineTo(size / 2, size);
  ctx.moveTo(0, size / 2); ctx.lineTo(size, size / 2);
  ctx.stroke();

  const field = prox_field(q, c, rho, EXTENT, STEPS);
  ctx.strokeStyle = "#2a5db0";
  ctx.fillStyle = "#2a5db0";
  for (let k = 0; k < field.length; k += 4) {
    const [x0, y0] = toPx(field[k], field[k + 1]);
    const [x1, y1] = toPx(field[k + 2], field[k + 3]);
    ctx.beginPath();
    ctx.moveTo(x0, y0);
    ctx.lineTo(x1, y1);
    ctx.stroke();
    ctx.beginPath();
    ctx.arc(x1, y1, 1.6, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function inspectProx(ev) {
  const canvas = $("prox-canvas");
  const rect = canvas.getBoundingClientRect();
  const ux = ((ev.clientX - rect.left) / rect.width) * 2 * EXTENT - EXTENT;
  const uy = EXTENT - ((ev.clientY - rect.top) / rect.height) * 2 * EXTENT;
  const { q, c, rho } = proxParams();
  const w = prox_point(ux, uy, c, rho, q);
  $("prox-info").textContent =
    `u = (${ux.toFixed(3)}, ${uy.toFixed(3)})  →  w = (${w[0].toFixed(4)}, ${w[1].toFixed(4)})`;
}

// Penalty curves

function drawPenalty() {
  const canvas = $("pen-canvas");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 36;
  const alpha = Number($("pen-alpha").value);
  const tMax = Number($("pen-tmax").value);
  const samples = 300;
  ctx.clearRect(0, 0, w, h);
  axes(ctx, w, h, pad);
  const toPx = (t, v) => [pad + (t / tMax) * (w - 2 * pad), h - pad - v * (h - 2 * pad) / 1.1];

  const curves = [
    ["exp", "#2a5db0", "1 − exp(−αt)"],
    ["capl1", "#c0552b", "min(αt, 1)"],
  ];
  curves.forEach(([kind, color, label], i) => {
    const ys = penalty_curve(kind, alpha, tMax, samples);
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ys.forEach((v, k) => {
      const [x, y] = toPx((tMax * k) / (samples - 1), v);
      k === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
    });
    ctx.stroke();
    ctx.fillStyle = color;
    ctx.fillText(label, w - pad - 120, pad + 16 * i);
  });

  ctx.fillStyle = "#555";
  ctx.fillText("0", pad - 12, h - pad + 4);
  ctx.fillText("1", pad - 12, toPx(0, 1)[1] + 4);
  ctx.fillText("t", w - pad + 6, h - pad + 4);
  ctx.fillText(tMax.toFixed(1), w - pad - 10, h - pad + 16);
}

// Objective trace

function drawTrace(result) {
  const canvas = $("tr-canvas");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 48;
  ctx.clearRect(0, 0, w, h);
  axes(ctx, w, h, pad);
  const series = [
    ["DCA", "#c0552b", result.dca],
    ["SDCA", "#2a5db0", result.sdca],
  ];
  const all = series.flatMap(([, , pts]) => pts);
  const maxEpoch = Math.max(...all.map((p) => p.epoch), 1);
  const lo = Math.min(...all.map((p) => p.objective));
  const hi = Math.max(...all.map((p) => p.objective));
  const span = hi - lo || 1;
  const toPx = (e, f) => [pad + (e / maxEpoch) * (w - 2 * pad), h - pad - ((f - lo) / span) * (h - 2 * pad)];

  series.forEach(([label, color, pts], i) => {
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    pts.forEach((p, k) => {
      const [x, y] = toPx(p.epoch, p.objective);
      k === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
    });
    ctx.stroke();
    ctx.fillStyle = color;
    ctx.fillText(label, w - pad - 50, pad + 16 * i);
  });
  ctx.fillStyle = "#555";
  ctx.fillText(hi.toPrecision(5), 4, pad + 4);
  ctx.fillText(lo.toPrecision(5), 4, h - pad);
  ctx.fillText("epoch", w - pad - 10, h - pad + 20);
  ctx.fillText(String(maxEpoch), w - pad - 6, h - pad + 34);

  const last = (pts) => pts[pts.length - 1];
  const fmt = (label, pts, sparsity) => {
    const p = last(pts);
    return `${label.padEnd(5)} F = ${p.objective.toFixed(6)}  after ${p.epoch} epochs / ${p.iteration} iterations, ` +
      `${p.seconds.toFixed(3)} s, ${sparsity.toFixed(0)}% of features selected`;
  };
  $("trace-info").textContent =
    `n = ${result.n}, d = ${result.d}, ρ = ${result.rho.toFixed(3)}\n` +
    fmt("DCA", result.dca, result.dca_sparsity) + "\n" +
    fmt("SDCA", result.sdca, result.sdca_sparsity);
}

function runTrace() {
  const info = $("trace-info");
  info.classList.remove("err");
  info.textContent = "running…";
  // Let the status text paint before the synchronous solve.
  setTimeout(() => {
    try {
      const json = objective_trace(
        Number($("tr-n").value),
        Number($("tr-lambda").value),
        Number($("tr-alpha").value),
        $("tr-q").value,
        Number($("tr-batch").value),
        Number($("tr-epochs").value),
        Number($("tr-seed").value) >>> 0,
      );
      drawTrace(JSON.parse(json));
    } catch (e) {
      info.classList.add("err");
      info.textContent = String(e.message ?? e);
    }
  }, 20);
}

await init();

bindRange("prox-c", drawProx);
bindRange("prox-rho", drawProx);
$("prox-q").addEventListener("change", drawProx);
$("prox-canvas").addEventListener("click", inspectProx);
bindRange("pen-alpha", drawPenalty);
bindRange("pen-tmax", drawPenalty);
$("tr-run").addEventListener("click", runTrace);

drawProx();
drawPenalty();
runTrace();
