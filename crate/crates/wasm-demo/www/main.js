import init, { Demo, kernel_profile, growth_curve, ring_vs_cast } from "./pkg/lenia_evo_wasm_demo.js";

const SIZE = 128;
const $ = (id) => document.getElementById(id);

await init();
let demo = new Demo(SIZE, SIZE, 42n);
let paused = false;
let genes = null;

const world = $("world");
world.width = SIZE;
world.height = SIZE;
const ctx = world.getContext("2d");

const CROSS = [[0, 1], [1, 0], [0, 2], [2, 0], [1, 2], [2, 1]];
for (let k = 0; k < 15; k++) {
  const [s, t] = k < 9 ? [Math.floor(k / 3), Math.floor(k / 3)] : CROSS[k - 9];
  const o = document.createElement("option");
  o.value = k;
  o.textContent = `${k}: ${s} -> ${t}`;
  $("kernel").append(o);
}

function draw() {
  ctx.putImageData(new ImageData(new Uint8ClampedArray(demo.frame()), SIZE, SIZE), 0, 0);
  const st = JSON.parse(demo.stats());
  $("stats").textContent = `step ${st.step}  occupied ${st.occupied_fraction.toFixed(3)}  genes ${st.alpha_fraction.toFixed(3)}`;
}

function loop() {
  if (!paused) {
    demo.step(1);
    draw();
  }
  requestAnimationFrame(loop);
}

function plot(canvas, series, lo, hi) {
  const c = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  c.clearRect(0, 0, w, h);
  const yOf = (v) => h - 4 - ((v - lo) / (hi - lo || 1)) * (h - 8);
  c.strokeStyle = "#444";
  c.beginPath();
  c.moveTo(0, yOf(0));
  c.lineTo(w, yOf(0));
  c.stroke();
  for (const [vals, color] of series) {
    c.strokeStyle = color;
    c.beginPath();
    vals.forEach((v, i) => {
      const x = (i / (vals.length - 1)) * w;
      i ? c.lineTo(x, yOf(v)) : c.moveTo(x, yOf(v));
    });
    c.stroke();
  }
}

function drawPlots() {
  if (!genes) return;
  const k = Number($("kernel").value);
  const kp = kernel_profile(genes, k, 100);
  plot($("kplot"), [[kp, "#6cf"]], 0, Math.max(...kp, 1e-6));
  const g = growth_curve(genes, k, 100);
  plot($("gplot"), [[g, "#fc6"]], Math.min(...g, -1e-6), Math.max(...g, 1e-6));
  const rc = ring_vs_cast(genes, k, 12, 24);
  const n = (rc.length - 1) / 2;
  const ring = rc.slice(0, n), cast = rc.slice(n, 2 * n);
  plot($("rplot"), [[cast, "#888"], [ring, "#f6c"]], Math.min(...ring, ...cast), Math.max(...ring, ...cast, 1e-9));
  $("picked").textContent += `  ring vs cast error ${rc[2 * n].toFixed(3)}`;
}

world.addEventListener("click", (e) => {
  const r = world.getBoundingClientRect();
  const x = Math.floor(((e.clientX - r.left) / r.width) * SIZE);
  const y = Math.floor(((e.clientY - r.top) / r.height) * SIZE);
  const g = demo.dropper_genotype(x, y, 6);
  if (g.length === 0) {
    $("picked").textContent = `(${x}, ${y}): no genes here`;
    return;
  }
  genes = g;
  $("picked").textContent = `(${x}, ${y})`;
  drawPlots();
});

$("kernel").addEventListener("change", () => {
  if (genes) $("picked").textContent = $("picked").textContent.split("  ")[0];
  drawPlots();
});

$("gmut").addEventListener("input", (e) => {
  demo.set_gamma_mut(Number(e.target.value));
  $("gmut-v").textContent = e.target.value;
});
$("gpen").addEventListener("input", (e) => {
  demo.set_gamma_pen(Number(e.target.value));
  $("gpen-v").textContent = e.target.value;
});
$("restart").addEventListener("click", () => {
  demo.restart(BigInt($("seed").value || 0));
  draw();
});
$("pause").addEventListener("click", (e) => {
  paused = !paused;
  e.target.textContent = paused ? "resume" : "pause";
});

draw();
loop();
