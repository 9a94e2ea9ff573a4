import init, { green, martinCentral, boundary } from "./pkg/suq2_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function plot(canvas, rows, logScale) {
  const ctx = canvas.getContext("2d");
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const pts = rows
    .map((r) => [r.s2, logScale ? Math.log10(Math.abs(r.value)) : r.value])
    .filter(([, y]) => Number.isFinite(y));
  if (pts.length < 2) return;
  const xs = pts.map((p) => p[0]);
  const ys = pts.map((p) => p[1]);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y1 - y0 < 1e-12) [y0, y1] = [y0 - 1, y1 + 1];
  const sx = (x) => 40 + ((x - x0) / (x1 - x0 || 1)) * (width - 50);
  const sy = (y) => height - 20 - ((y - y0) / (y1 - y0)) * (height - 30);
  ctx.fillStyle = "#666";
  ctx.font = "11px sans-serif";
  ctx.fillText((logScale ? "1e" : "") + y1.toPrecision(3), 2, 12);
  ctx.fillText((logScale ? "1e" : "") + y0.toPrecision(3), 2, height - 22);
  ctx.fillText(`twice-spin ${x0} .. ${x1}`, width / 2 - 40, height - 4);
  ctx.strokeStyle = "#2a6fb0";
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
  ctx.stroke();
}

function render(target, json, logScale) {
  const data = JSON.parse(json);
  const canvas = document.createElement("canvas");
  canvas.width = 640;
  canvas.height = 200;
  const body = data.rows
    .map((r) => `<tr><td>${r.s2}</td><td>${r.value.toExponential(10)}</td><td>${r.tail_bound.toExponential(2)}</td></tr>`)
    .join("");
  target.replaceChildren(canvas);
  target.insertAdjacentHTML(
    "beforeend",
    `<div class="scroll"><table><tr><th>s2</th><th>value</th><th>bound</th></tr>${body}</table></div>`,
  );
  plot(canvas, data.rows, logScale);
}

function wire(button, out, compute, logScale) {
  $(button).addEventListener("click", () => {
    const target = $(out);
    try {
      render(target, compute(), logScale);
    } catch (e) {
      target.innerHTML = `<p class="error">${e.message ?? e}</p>`;
    }
  });
}

await init();
wire("green-run", "green-out", () => green(num("q"), $("phi").value, num("green-target"), num("green-smax")), true);
wire("martin-run", "martin-out", () => martinCentral(num("q"), $("phi").value, num("martin-target"), num("martin-smax")), false);
wire("boundary-run", "boundary-out", () => boundary(num("q"), $("phi").value, num("boundary-n"), num("boundary-rmax")), true);
