import init, { Demo, fusion_overlap } from "./pkg/wayfind_demo.js";

await init();
const demo = new Demo();
const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

for (const input of document.querySelectorAll("input[type=range]")) {
  const show = () => (input.nextElementSibling.textContent = input.value);
  input.addEventListener("input", show);
  show();
}

function drawView() {
  const w = demo.width();
  const h = demo.height();
  const img = new ImageData(new Uint8ClampedArray(demo.overlay()), w, h);
  $("view").getContext("2d").putImageData(img, 0, 0);
}

function drawFan(d) {
  const c = $("fan");
  const ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  if (!d.awards.length) return;
  const n = d.awards.length;
  const ox = c.width / 2;
  const oy = c.height - 10;
  const scale = (c.height - 30) / Math.max(...d.nearest);
  const lo = Math.min(...d.awards);
  const hi = Math.max(...d.awards);
  for (let i = 0; i < n; i++) {
    // sector i spans angles theta*(i - n/2) .. theta*(i + 1 - n/2), right positive
    const a0 = ((d.theta * (i - n / 2)) * Math.PI) / 180;
    const a1 = ((d.theta * (i + 1 - n / 2)) * Math.PI) / 180;
    const r = d.nearest[i] * scale;
    const t = hi > lo ? (d.awards[i] - lo) / (hi - lo) : 1;
    ctx.fillStyle = i === d.sector ? "#e0a000" : `hsl(${120 * t}, 60%, ${70 - 25 * t}%)`;
    ctx.beginPath();
    ctx.moveTo(ox, oy);
    ctx.lineTo(ox + r * Math.sin(a0), oy - r * Math.cos(a0));
    ctx.lineTo(ox + r * Math.sin(a1), oy - r * Math.cos(a1));
    ctx.closePath();
    ctx.fill();
  }
}

function direction() {
  const d = JSON.parse(demo.direction(num("wsw"), num("tau"), $("centered").checked));
  $("dir").textContent = `${d.action}: ${d.text}`;
  drawFan(d);
}

function segment() {
  try {
    const s = JSON.parse(
      demo.segment(num("pitch"), num("roll"), num("slope"), num("boxx"), num("boxz"), 1),
    );
    const height = s.height === null ? "-" : s.height.toFixed(3) + " m";
    const slope = s.slope_deg === null ? "-" : s.slope_deg.toFixed(1) + " deg";
    $("ground").textContent =
      `class ${s.class}, height ${height}, slope ${slope}\n` +
      `${s.ground_pixels} ground pixels, ${s.obstacle_pixels} obstacle pixels` +
      (s.reason ? `\n${s.reason}` : "");
  } catch (e) {
    $("ground").textContent = String(e);
  }
  drawView();
  direction();
}

function fuse() {
  const a = [40, 50, 80, 100];
  const b = [num("bx"), 50, num("bw"), 100];
  const r = JSON.parse(fusion_overlap(...a, ...b, num("zeta")));
  const ctx = $("boxes").getContext("2d");
  ctx.clearRect(0, 0, 200, 200);
  ctx.globalAlpha = 0.5;
  ctx.fillStyle = "#3060d0";
  ctx.fillRect(...a);
  ctx.fillStyle = "#e08020";
  ctx.fillRect(...b);
  ctx.globalAlpha = 1;
  $("fuse").textContent = `ratio ${r.ratio.toFixed(3)}: ${r.fused ? "fused" : "kept apart"}`;
}

for (const id of ["pitch", "roll", "slope", "boxx", "boxz"]) $(id).addEventListener("input", segment);
for (const id of ["wsw", "tau", "centered"]) $(id).addEventListener("input", direction);
for (const id of ["bx", "bw", "zeta"]) $(id).addEventListener("input", fuse);
segment();
fuse();
