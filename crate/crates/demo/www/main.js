import init, { Lab, shiftDemo, metrics } from "./pkg/stecnn_demo.js";

const $ = (id) => document.getElementById(id);
const L = 16;
let lab;

function fail(el, e) {
  el.textContent = String(e.message ?? e);
  el.classList.add("err");
}

function plotWindow(ctx, w, label, pred) {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  const colors = ["#1b6ca8", "#d1495b", "#edae49", "#00798c", "#30638e", "#6a4c93"];
  const row = height / 6;
  const dx = width / L;
  if (label > 0) {
    ctx.fillStyle = "rgba(0,160,0,.15)";
    ctx.fillRect((label - 1) * dx, 0, dx, height);
  }
  if (pred > 0) {
    ctx.strokeStyle = "#b00";
    ctx.strokeRect((pred - 1) * dx + 1, 1, dx - 2, height - 2);
  }
  for (let f = 0; f < 6; f++) {
    ctx.strokeStyle = colors[f];
    ctx.beginPath();
    for (let u = 0; u < L; u++) {
      const v = Math.max(-3, Math.min(3, w[f * L + u]));
      const y = row * (f + 0.5) - (v * row) / 6;
      u === 0 ? ctx.moveTo((u + 0.5) * dx, y) : ctx.lineTo((u + 0.5) * dx, y);
    }
    ctx.stroke();
  }
}

function plotProbs(ctx, p) {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  const dx = width / p.length;
  p.forEach((v, c) => {
    ctx.fillStyle = c === 0 ? "#888" : "#1b6ca8";
    ctx.fillRect(c * dx + 2, height * (1 - v), dx - 4, height * v);
    ctx.fillStyle = "#222";
    ctx.fillText(String(c), c * dx + dx / 2 - 4, height - 2);
  });
}

function showWindow() {
  const i = Number($("index").value);
  const p = lab.predict(i);
  const pred = p.indexOf(Math.max(...p));
  plotWindow($("window").getContext("2d"), lab.window(i), lab.label(i), pred);
  plotProbs($("probs").getContext("2d"), p);
}

function showScore(loss) {
  const [acc1, gmean] = lab.score();
  const head = loss === undefined ? "" : `last epoch loss ${loss.toFixed(4)}\n`;
  $("status").textContent =
    `${head}epochs ${lab.epochs()}  held-out Acc-1 ${acc1.toFixed(3)}  G-mean ${gmean.toFixed(3)}`;
}

function reset() {
  try {
    lab = new Lab(Number($("seed").value));
    lab.setWidthScale(Number($("scale").value));
    $("index").max = lab.windowCount() - 1;
    $("status").classList.remove("err");
    showScore();
    showWindow();
  } catch (e) {
    fail($("status"), e);
  }
}

function fit() {
  $("status").textContent = "training...";
  setTimeout(() => {
    try {
      const loss = lab.train(Number($("epochs").value));
      showScore(loss);
      showWindow();
    } catch (e) {
      fail($("status"), e);
    }
  }, 10);
}

function heat(ctx, data, scales, x0, y0, w, h, title) {
  const max = Math.max(...data.map(Math.abs)) || 1;
  const dx = w / L, dy = h / scales;
  for (let j = 0; j < scales; j++) {
    for (let u = 0; u < L; u++) {
      const v = data[j * L + u] / max;
      ctx.fillStyle = v >= 0 ? `rgba(209,73,91,${v})` : `rgba(27,108,168,${-v})`;
      ctx.fillRect(x0 + u * dx, y0 + j * dy, dx, dy);
    }
  }
  ctx.fillStyle = "#222";
  ctx.fillText(title, x0, y0 - 4);
}

function showShift() {
  const t = Number($("t").value);
  $("tval").textContent = `t = ${t}`;
  try {
    const out = shiftDemo(7, t);
    const [err, scales] = [out[0], out[1]];
    const n = 6 * L, m = scales * L;
    const ofShifted = out.slice(2 + n, 2 + n + m);
    const shifted = out.slice(2 + n + m);
    const ctx = $("maps").getContext("2d");
    ctx.clearRect(0, 0, 800, 200);
    heat(ctx, ofShifted, scales, 10, 30, 370, 150, "lift(shift(x))");
    heat(ctx, shifted, scales, 420, 30, 370, 150, "shift(lift(x))");
    $("shiftout").textContent = `max |difference| = ${err.toExponential(2)} over ${scales} scales`;
  } catch (e) {
    fail($("shiftout"), e);
  }
}

function score() {
  const el = $("metricsout");
  try {
    const r = JSON.parse(metrics($("labels").value, $("preds").value));
    el.classList.remove("err");
    el.textContent = Object.entries(r)
      .map(([k, v]) => `${k.padEnd(8)} ${typeof v === "number" && !Number.isInteger(v) ? v.toFixed(4) : v}`)
      .join("\n");
  } catch (e) {
    fail(el, e);
  }
}

await init();
$("reset").onclick = reset;
$("fit").onclick = fit;
$("scale").onchange = () => { lab.setWidthScale(Number($("scale").value)); showScore(); showWindow(); };
$("index").oninput = showWindow;
$("t").oninput = showShift;
$("score").onclick = score;
reset();
showShift();
score();
