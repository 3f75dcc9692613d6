import init, { noisyScene, edgeMask, denoise, rmse } from "./pkg/adaptive_denoise_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const state = { n: 0, truth: null, noisy: null };

function draw(canvas, values, n, gray = (v) => v) {
  canvas.width = n;
  canvas.height = n;
  const ctx = canvas.getContext("2d");
  const image = ctx.createImageData(n, n);
  for (let i = 0; i < values.length; i++) {
    const g = Math.max(0, Math.min(255, Math.round(gray(values[i]))));
    image.data.set([g, g, g, 255], 4 * i);
  }
  ctx.putImageData(image, 0, 0);
}

function guard(action) {
  return () => {
    $("status").textContent = "";
    try {
      action();
    } catch (err) {
      $("status").textContent = String(err.message ?? err);
    }
  };
}

function generate() {
  const n = num("n");
  const both = noisyScene($("scene").value, n, num("sd"), num("seed"));
  state.n = n;
  state.truth = both.slice(0, n * n);
  state.noisy = both.slice(n * n);
  draw($("truth"), state.truth, n);
  draw($("noisy"), state.noisy, n);
  $("noisyCap").textContent = `noisy, RMSE ${rmse(state.noisy, state.truth, n).toFixed(2)}`;
  // parameter defaults follow the image size
  $("gamma").value = n < 100 ? 3 : 5;
  $("maxAxis").value = n < 100 ? 6 : 10;
}

function detect() {
  const mask = edgeMask(state.noisy, state.n, num("k"), num("alpha"));
  draw($("mask"), mask, state.n, (m) => 255 * m);
  $("maskCap").textContent = `edges, ${mask.reduce((a, b) => a + b, 0)} pixels`;
}

function restore() {
  const start = performance.now();
  const out = denoise(state.noisy, state.n, $("mode").value, num("gamma"), num("maxAxis"));
  const ms = performance.now() - start;
  draw($("out"), out, state.n);
  $("outCap").textContent =
    `${$("mode").value}, RMSE ${rmse(out, state.truth, state.n).toFixed(2)}, ${ms.toFixed(0)} ms`;
}

await init();
$("make").onclick = guard(generate);
$("edges").onclick = guard(detect);
$("run").onclick = guard(restore);
guard(() => {
  generate();
  detect();
  restore();
})();
