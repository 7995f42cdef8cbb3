import init, { ml_curve, fbm_path, simulate_profile } from "./pkg/fracexp_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function plot(canvas, ys, opts = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 30;
  ctx.clearRect(0, 0, w, h);
  let lo = opts.lo ?? Math.min(...ys), hi = opts.hi ?? Math.max(...ys);
  if (hi === lo) { hi += 1; lo -= 1; }
  const sx = (i) => pad + (w - 2 * pad) * i / (ys.length - 1);
  const sy = (v) => h - pad - (h - 2 * pad) * (v - lo) / (hi - lo);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, sy(0)); ctx.lineTo(w - pad, sy(0));
  ctx.stroke();
  ctx.fillStyle = "#555";
  ctx.fillText(hi.toPrecision(3), 2, pad);
  ctx.fillText(lo.toPrecision(3), 2, h - pad);
  ctx.strokeStyle = "#1f5fbf";
  ctx.beginPath();
  ys.forEach((v, i) => (i ? ctx.lineTo(sx(i), sy(v)) : ctx.moveTo(sx(i), sy(v))));
  ctx.stroke();
}

function guarded(errId, f) {
  return () => {
    $(errId).textContent = "";
    try { f(); } catch (e) { $(errId).textContent = String(e.message ?? e); }
  };
}

let frames = null, nodes = 0;
const SIM_N = 31, SIM_STEPS = 64;

function showFrame() {
  if (!frames) return;
  const k = num("sim-t");
  const row = frames.subarray(k * nodes, (k + 1) * nodes);
  plot($("sim-plot"), Array.from(row), { lo: -1.5, hi: 1.5 });
  $("sim-tval").textContent = ` t = ${(k / SIM_STEPS).toFixed(3)}`;
}

await init();

$("ml-go").onclick = guarded("ml-err", () => {
  plot($("ml-plot"), Array.from(ml_curve(num("ml-alpha"), num("ml-beta"), num("ml-xmax"), 400)));
});
$("fbm-go").onclick = guarded("fbm-err", () => {
  plot($("fbm-plot"), Array.from(fbm_path(num("fbm-h"), num("fbm-steps"), num("fbm-seed"))));
});
$("sim-go").onclick = guarded("sim-err", () => {
  frames = simulate_profile(num("sim-alpha"), num("sim-h"), SIM_N, SIM_STEPS, num("sim-g"), num("sim-phi"), num("sim-seed"));
  nodes = SIM_N + 2;
  showFrame();
});
$("sim-t").oninput = showFrame;

$("ml-go").click();
$("fbm-go").click();
$("sim-go").click();
