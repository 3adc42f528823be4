import init, { Demo, partition_curves } from "./pkg/fgrt_web.js";

const TERM_COLOURS = ["#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];
const CLASS_COLOURS = ["#e6550d", "#3182bd", "#31a354", "#756bb1", "#636363"];
const CLASS_TINTS = ["#fdd0a2", "#c6dbef", "#c7e9c0", "#dadaeb", "#d9d9d9"];

const $ = (id) => document.getElementById(id);
const showError = (e) => { $("error").textContent = String(e && e.message ? e.message : e); };

function drawCurves(canvas, grid, curves, samples) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 20;
  ctx.clearRect(0, 0, w, h);
  const lo = grid[0], hi = grid[grid.length - 1];
  const sx = (v) => pad + (w - 2 * pad) * (v - lo) / (hi - lo);
  const sy = (m) => h - pad - (h - 2 * pad - 20) * m;

  samples.forEach(([v, c]) => {
    ctx.fillStyle = CLASS_COLOURS[c % CLASS_COLOURS.length];
    ctx.fillRect(sx(v) - 1, h - pad + 4 + 4 * c, 2, 3);
  });
  curves.forEach((curve, t) => {
    ctx.strokeStyle = TERM_COLOURS[t % TERM_COLOURS.length];
    ctx.lineWidth = 2;
    ctx.beginPath();
    curve.forEach((m, i) => (i ? ctx.lineTo(sx(grid[i]), sy(m)) : ctx.moveTo(sx(grid[i]), sy(m))));
    ctx.stroke();
  });
  ctx.strokeStyle = "#999";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(pad, sy(0));
  ctx.lineTo(w - pad, sy(0));
  ctx.stroke();
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(lo.toFixed(2), pad, 12);
  ctx.fillText(hi.toFixed(2), w - pad - 30, 12);
}

function showCurves() {
  try {
    const c = JSON.parse(partition_curves(Number($("feature").value)));
    $("si").textContent =
      `${c.feature}: separability ${c.si_before.toFixed(2)} -> ${c.si_after.toFixed(2)} ` +
      `after ${c.evaluations} evaluations; terms ${c.terms.join(", ")}; ticks below the axis are the samples by class`;
    drawCurves($("before"), c.grid, c.quantile, c.samples);
    drawCurves($("after"), c.grid, c.optimized, c.samples);
  } catch (e) {
    showError(e);
  }
}

let demo;
let trained;

function mapCoords(canvas, [x0, x1, y0, y1]) {
  const toPixel = (x, y) => [
    canvas.width * (x - x0) / (x1 - x0),
    canvas.height * (1 - (y - y0) / (y1 - y0)),
  ];
  const toData = (px, py) => [
    x0 + (x1 - x0) * px / canvas.width,
    y0 + (y1 - y0) * (1 - py / canvas.height),
  ];
  return { toPixel, toData };
}

function drawMap(marker) {
  const canvas = $("map");
  const ctx = canvas.getContext("2d");
  const r = trained.resolution;
  const cw = canvas.width / r, ch = canvas.height / r;
  trained.grid.forEach((c, k) => {
    const i = k % r, j = Math.floor(k / r);
    ctx.fillStyle = CLASS_TINTS[c % CLASS_TINTS.length];
    ctx.fillRect(i * cw, canvas.height - (j + 1) * ch, cw + 1, ch + 1);
  });
  const { toPixel } = mapCoords(canvas, trained.bounds);
  trained.points.forEach(([x, y, c]) => {
    const [px, py] = toPixel(x, y);
    ctx.fillStyle = CLASS_COLOURS[c % CLASS_COLOURS.length];
    ctx.beginPath();
    ctx.arc(px, py, 2.5, 0, 2 * Math.PI);
    ctx.fill();
  });
  if (marker) {
    const [px, py] = toPixel(...marker);
    ctx.strokeStyle = "#000";
    ctx.lineWidth = 2;
    ctx.strokeRect(px - 5, py - 5, 10, 10);
  }
}

function train() {
  try {
    const json = demo.train(
      $("kind").value,
      Number($("n").value),
      Number($("rules").value),
      $("optimize").checked,
      Number($("seed").value),
    );
    trained = JSON.parse(json);
    $("summary").textContent =
      `${trained.rules.length} rules, ${trained.conditions_per_rule.toFixed(2)} conditions per rule, ` +
      `training accuracy ${(100 * trained.training_accuracy).toFixed(1)}%`;
    $("rulebase").textContent = trained.rules.join("\n") || "(no rules: the prior decides)";
    $("explanation").textContent = "No point selected.";
    drawMap();
    $("error").textContent = "";
  } catch (e) {
    showError(e);
  }
}

function explainClick(event) {
  if (!trained) return;
  const canvas = $("map");
  const rect = canvas.getBoundingClientRect();
  const { toData } = mapCoords(canvas, trained.bounds);
  const point = toData(event.clientX - rect.left, event.clientY - rect.top);
  try {
    const e = JSON.parse(demo.explain(point[0], point[1]));
    const scores = e.scores.map((s, c) => `${trained.classes[c]}=${s.toFixed(3)}`).join(", ");
    $("explanation").textContent =
      `point (${point[0].toFixed(2)}, ${point[1].toFixed(2)}) -> class ${e.class}\n` +
      `scores: ${scores}${e.fallback ? " (fallback)" : ""}\n\n${e.explanation}`;
    drawMap(point);
  } catch (err) {
    showError(err);
  }
}

async function main() {
  await init();
  demo = new Demo();
  const names = JSON.parse(partition_curves(0)).features;
  names.forEach((name, i) => $("feature").add(new Option(name, i)));
  $("feature").value = "6";
  $("feature").addEventListener("change", showCurves);
  $("train").addEventListener("click", train);
  $("map").addEventListener("click", explainClick);
  showCurves();
  train();
}

main().catch(showError);
