import init, { capacity_curves, scheme_pairs, boundary_point } from "./pkg/mmac_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

function axes(ctx, box, xr, yr, xlabel, ylabel) {
  const { width: w, height: h } = ctx.canvas;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(box.l, box.t, w - box.l - box.r, h - box.t - box.b);
  ctx.fillStyle = "#333";
  ctx.font = "11px sans-serif";
  const sx = (x) => box.l + ((x - xr[0]) / (xr[1] - xr[0])) * (w - box.l - box.r);
  const sy = (y) => h - box.b - ((y - yr[0]) / (yr[1] - yr[0])) * (h - box.t - box.b);
  for (let i = 0; i <= 5; i++) {
    const x = xr[0] + ((xr[1] - xr[0]) * i) / 5;
    const y = yr[0] + ((yr[1] - yr[0]) * i) / 5;
    ctx.fillText(x.toFixed(2), sx(x) - 10, h - box.b + 14);
    ctx.fillText(y.toFixed(2), 4, sy(y) + 4);
  }
  ctx.fillText(xlabel, w / 2 - 20, h - 4);
  ctx.save();
  ctx.translate(12, h / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(ylabel, -20, 0);
  ctx.restore();
  return { sx, sy };
}

function legend(ctx, names) {
  names.forEach((n, i) => {
    ctx.fillStyle = COLORS[i % COLORS.length];
    ctx.fillRect(ctx.canvas.width - 170, 14 + 16 * i, 10, 10);
    ctx.fillStyle = "#333";
    ctx.fillText(n, ctx.canvas.width - 155, 23 + 16 * i);
  });
}

const BOX = { l: 48, r: 12, t: 10, b: 34 };

function plotLines(canvas, series, xlabel, ylabel) {
  const ctx = canvas.getContext("2d");
  const pts = series.flatMap((s) => s.points);
  const xr = [Math.min(...pts.map((p) => p[0])), Math.max(...pts.map((p) => p[0]))];
  const yr = [0, Math.max(...pts.map((p) => p[1])) * 1.05 || 1];
  const { sx, sy } = axes(ctx, BOX, xr, yr, xlabel, ylabel);
  series.forEach((s, i) => {
    ctx.strokeStyle = COLORS[i % COLORS.length];
    ctx.fillStyle = COLORS[i % COLORS.length];
    ctx.beginPath();
    s.points.forEach(([x, y], j) => (j ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
    if (s.line !== false) ctx.stroke();
    if (s.dots) s.points.forEach(([x, y]) => ctx.fillRect(sx(x) - 2, sy(y) - 2, 4, 4));
  });
  legend(ctx, series.map((s) => s.name));
}

function busy(id, text) {
  document.getElementById(id).textContent = text;
  return new Promise((r) => setTimeout(r, 20));
}

function num(id) {
  return Number(document.getElementById(id).value);
}

async function runCapacity() {
  await busy("cap-status", "computing...");
  try {
    const t = performance.now();
    const rows = JSON.parse(capacity_curves(num("cap-min"), num("cap-max"), num("cap-steps")));
    const s = (name, key) => ({ name, points: rows.filter((r) => r[key] !== null).map((r) => [r.snr_db, r[key]]) });
    plotLines(
      document.getElementById("cap-plot"),
      [s("C1 = Csum", "c1"), s("C2, |X2| = 1", "c2_unit"), s("C2, |X2| <= 1", "c2_disk"), s("peak-power bound", "ub_mckellips"), s("average-power bound", "ub_avgpower")],
      "SNR (dB)",
      "bits",
    );
    busy("cap-status", `done in ${((performance.now() - t) / 1000).toFixed(1)} s (disk curve stops at 20 dB)`);
  } catch (e) {
    busy("cap-status", String(e));
  }
}

async function runSchemes() {
  await busy("sch-status", "computing...");
  try {
    const table = JSON.parse(scheme_pairs(num("sch-snr"), num("sch-n")));
    const pick = (scheme, order) =>
      table.rows.filter((r) => r.scheme === scheme && r.order === order).map((r) => [r.r1, r.r2]);
    plotLines(
      document.getElementById("sch-plot"),
      [
        { name: "sum-rate line", points: [[table.csum, 0], [0, table.csum]] },
        { name: "I, X1 first", points: pick("I", "x1_first"), dots: true, line: false },
        { name: "II, X1 first", points: pick("II", "x1_first"), dots: true, line: false },
        { name: "I, X2 first", points: pick("I", "x2_first"), dots: true, line: false },
        { name: "II, X2 first", points: pick("II", "x2_first"), dots: true, line: false },
      ],
      "R1 (bits)",
      "R2 (bits)",
    );
    busy("sch-status", `Csum = ${table.csum.toFixed(4)} bits`);
  } catch (e) {
    busy("sch-status", String(e));
  }
}

async function runPoint() {
  await busy("bp-status", "optimizing (this can take a while)...");
  try {
    const t = performance.now();
    const p = JSON.parse(boundary_point(num("bp-snr"), num("bp-mu"), document.getElementById("bp-disk").checked, num("bp-m")));
    const canvas = document.getElementById("bp-plot");
    const ctx = canvas.getContext("2d");
    const xmax = Math.max(...p.amplitude.map((a) => a[0])) * 1.1 || 1;
    const { sx, sy } = axes(ctx, BOX, [0, xmax], [0, 1], "amplitude of X1", "probability");
    ctx.strokeStyle = COLORS[0];
    ctx.lineWidth = 2;
    p.amplitude.forEach(([a, q]) => {
      ctx.beginPath();
      ctx.moveTo(sx(a), sy(0));
      ctx.lineTo(sx(a), sy(q));
      ctx.stroke();
    });
    ctx.lineWidth = 1;
    const rings = p.radii.map(([r, q]) => `${r.toFixed(3)} (${q.toFixed(3)})`).join(", ");
    busy(
      "bp-status",
      `R1 = ${p.r1.toFixed(4)}, R2 = ${p.r2.toFixed(4)} bits; ${p.amplitude.length} points; ` +
        `|X2| rings: ${rings}; KKT ${p.kkt_violation.toExponential(2)}` +
        `${p.converged ? "" : " (not certified)"}; ${((performance.now() - t) / 1000).toFixed(1)} s`,
    );
  } catch (e) {
    busy("bp-status", String(e));
  }
}

await init();
document.getElementById("cap-run").onclick = runCapacity;
document.getElementById("sch-run").onclick = runSchemes;
document.getElementById("bp-run").onclick = runPoint;
runSchemes();
