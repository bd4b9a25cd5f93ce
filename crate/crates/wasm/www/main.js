import init, { compareDistributions, spectrumCurves, errorCurve } from "./pkg/markov_claims_wasm.js";

const $ = (id) => document.getElementById(id);

function inputs() {
  return {
    alpha: Number($("alpha").value),
    beta: Number($("beta").value),
    gamma: Number($("gamma").value),
    d: Number($("d").value),
    n: Number($("n").value),
    variant: $("variant").value,
  };
}

function status(id, text, isError = false) {
  const el = $(id);
  el.textContent = text;
  el.className = isError ? "status error" : "status";
}

// Draws polylines (or bars) on a canvas with linear or log axes.
function plot(canvas, series, opts = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 48;
  ctx.clearRect(0, 0, W, H);
  const fx = opts.logX ? Math.log10 : (v) => v;
  const fy = opts.logY ? Math.log10 : (v) => v;
  const pts = series.flatMap((s) => s.x.map((x, i) => [x, s.y[i]]))
    .filter(([x, y]) => y !== null && Number.isFinite(fx(x)) && Number.isFinite(fy(y)));
  if (pts.length === 0) return;
  let [x0, x1] = [Math.min(...pts.map((p) => fx(p[0]))), Math.max(...pts.map((p) => fx(p[0])))];
  let [y0, y1] = [Math.min(...pts.map((p) => fy(p[1]))), Math.max(...pts.map((p) => fy(p[1])))];
  if (opts.zeroY) y0 = Math.min(y0, 0);
  if (x1 === x0) x1 = x0 + 1;
  if (y1 === y0) y1 = y0 + 1;
  const sx = (v) => pad + ((fx(v) - x0) / (x1 - x0)) * (W - 2 * pad);
  const sy = (v) => H - pad - ((fy(v) - y0) / (y1 - y0)) * (H - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
  const label = (v, log) => (log ? "1e" + v.toFixed(1) : v.toPrecision(3));
  for (let i = 0; i <= 4; i++) {
    const yv = y0 + ((y1 - y0) * i) / 4;
    const xv = x0 + ((x1 - x0) * i) / 4;
    ctx.fillText(label(yv, opts.logY), 2, H - pad - ((H - 2 * pad) * i) / 4 + 4);
    ctx.fillText(label(xv, opts.logX), pad + ((W - 2 * pad) * i) / 4 - 12, H - pad + 16);
  }

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.fillStyle = s.color;
    if (s.bars) {
      const bw = Math.max(1, (W - 2 * pad) / (s.x.length * 2.5));
      const base = sy(Math.max(y0, 0));
      s.x.forEach((x, i) => {
        const top = sy(s.y[i]);
        ctx.fillRect(sx(x) + (s.offset || 0) * bw, Math.min(top, base), bw, Math.abs(base - top));
      });
      continue;
    }
    ctx.beginPath();
    let pen = false;
    s.x.forEach((x, i) => {
      const y = s.y[i];
      if (y === null || !Number.isFinite(fy(y))) { pen = false; return; }
      pen ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y));
      pen = true;
    });
    ctx.stroke();
  }
}

function runCompare() {
  const p = inputs();
  try {
    const r = JSON.parse(compareDistributions(p.alpha, p.beta, p.gamma, p.d, p.n, p.variant));
    plot($("compare-plot"), [
      { x: r.k, y: r.exact, color: "#1f77b4", bars: true, offset: 0 },
      { x: r.k, y: r.approx, color: "#d62728", bars: true, offset: 1 },
    ], { zeroY: true });
    status("compare-status",
      `Kolmogorov ${r.kolmogorov.toExponential(3)}, local ${r.local.toExponential(3)}, ` +
      `TV ${r.total_variation.toExponential(3)} (grid ${r.n_used})`);
  } catch (e) {
    status("compare-status", String(e), true);
  }
}

function runSpectrum() {
  const p = inputs();
  try {
    const s = JSON.parse(spectrumCurves(p.alpha, p.beta, p.gamma, p.d, p.n, p.variant, 1024));
    plot($("spectrum-plot"), [
      { x: s.t, y: s.lambda1, color: "#1f77b4" },
      { x: s.t, y: s.lambda2, color: "#ff7f0e" },
      { x: s.t, y: s.g, color: "#2ca02c" },
      { x: s.t, y: s.g1, color: "#9467bd" },
      { x: s.t, y: s.exact_n, color: "#222" },
      { x: s.t, y: s.approx_n, color: "#d62728" },
    ], { zeroY: true });
    status("spectrum-status", `${s.t.length} midpoint nodes`);
  } catch (e) {
    status("spectrum-status", String(e), true);
  }
}

function runErrors() {
  const p = inputs();
  status("errors-status", "computing...");
  setTimeout(() => {
    try {
      const c = JSON.parse(errorCurve(p.alpha, p.beta, p.gamma, p.d, p.variant, p.n));
      plot($("errors-plot"), [
        { x: c.n, y: c.kolmogorov, color: "#1f77b4" },
        { x: c.n, y: c.local, color: "#2ca02c" },
        { x: c.n, y: c.total_variation, color: "#d62728" },
      ], { logX: true, logY: true });
      status("errors-status", c.n.map((n, i) => `n=${n}: ${c.kolmogorov[i].toExponential(2)}`).join(", "));
    } catch (e) {
      status("errors-status", String(e), true);
    }
  }, 10);
}

await init();
$("run-compare").addEventListener("click", runCompare);
$("run-spectrum").addEventListener("click", runSpectrum);
$("run-errors").addEventListener("click", runErrors);
runCompare();
runSpectrum();
