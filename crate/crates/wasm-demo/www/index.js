import init, { stabilityField, amplificationAt, orderStudy } from "./pkg/idcos_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const status = (msg, bad = false) => {
  $("status").textContent = msg;
  $("status").className = bad ? "err" : "";
};

const scheme = () => [$("scheme").value, num("cs"), num("m")];
let view = null;

function colour(a) {
  if (!Number.isFinite(a)) return [0, 0, 0];
  if (a <= 1) {
    const s = Math.round(255 * a);
    return [s, s, 255];
  }
  const s = Math.round(255 / Math.min(a, 4) ** 2);
  return [255, s, s];
}

function drawMap() {
  const n = Math.max(10, Math.min(400, num("res")));
  const [re0, re1, im0, im1] = ["re0", "re1", "im0", "im1"].map(num);
  const t0 = performance.now();
  const field = stabilityField(...scheme(), re0, re1, im0, im1, n, n);
  const amp = field.amp;
  const cv = $("map");
  const ctx = cv.getContext("2d");
  const img = ctx.createImageData(n, n);
  for (let j = 0; j < n; j++) {
    for (let i = 0; i < n; i++) {
      const [r, g, b] = colour(amp[j * n + i]);
      const k = 4 * ((n - 1 - j) * n + i);
      img.data.set([r, g, b, 255], k);
    }
  }
  const tmp = new OffscreenCanvas(n, n);
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, cv.width, cv.height);

  const px = (x) => ((x - re0) / (re1 - re0)) * cv.width;
  const py = (y) => (1 - (y - im0) / (im1 - im0)) * cv.height;
  ctx.strokeStyle = "#000";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  const c = field.contour;
  for (let k = 0; k < c.length; k += 4) {
    ctx.moveTo(px(c[k]), py(c[k + 1]));
    ctx.lineTo(px(c[k + 2]), py(c[k + 3]));
  }
  ctx.stroke();
  ctx.strokeStyle = "#666";
  ctx.lineWidth = 0.5;
  ctx.beginPath();
  ctx.moveTo(px(0), 0); ctx.lineTo(px(0), cv.height);
  ctx.moveTo(0, py(0)); ctx.lineTo(cv.width, py(0));
  ctx.stroke();
  field.free();
  view = { re0, re1, im0, im1 };
  status(`${n}×${n} cells in ${(performance.now() - t0).toFixed(0)} ms`);
}

function probe(ev) {
  if (!view) return;
  const cv = $("map");
  const r = cv.getBoundingClientRect();
  const re = view.re0 + ((ev.clientX - r.left) / r.width) * (view.re1 - view.re0);
  const im = view.im1 - ((ev.clientY - r.top) / r.height) * (view.im1 - view.im0);
  const [ar, ai, abs, star] = amplificationAt(...scheme(), re, im);
  const sign = ai < 0 ? "-" : "+";
  $("point").textContent =
    `λ = ${re.toFixed(3)} ${im < 0 ? "-" : "+"} ${Math.abs(im).toFixed(3)}i\n` +
    `amp = ${ar.toPrecision(6)} ${sign} ${Math.abs(ai).toPrecision(6)}i, |amp| = ${abs.toPrecision(6)}\n` +
    `real-axis boundary λ* = ${Number.isNaN(star) ? "none in [-1e6, 0)" : star.toPrecision(8)}`;
}

function runStudy() {
  const rows = orderStudy(...scheme(), num("l1"), num("l2"), num("t"), num("n0"), num("levels"));
  const body = $("orders").tBodies[0];
  body.replaceChildren();
  for (let k = 0; k < rows.length; k += 3) {
    const tr = body.insertRow();
    tr.insertCell().textContent = rows[k];
    tr.insertCell().textContent = rows[k + 1].toExponential(3);
    tr.insertCell().textContent = Number.isNaN(rows[k + 2]) ? "" : rows[k + 2].toFixed(2);
  }
  status("");
}

const guard = (f) => (ev) => {
  try {
    f(ev);
  } catch (e) {
    status(String(e.message ?? e), true);
  }
};

await init();
$("scan").addEventListener("click", guard(drawMap));
$("map").addEventListener("click", guard(probe));
$("study").addEventListener("click", guard(runStudy));
guard(drawMap)();
