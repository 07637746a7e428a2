import init, { analyze_fig2, fig2_curves, gaussian_curve } from "./pkg/srd_web.js";

const $ = (id) => document.getElementById(id);

function plot(canvas, d, series) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 44;
  ctx.clearRect(0, 0, w, h);
  const values = series.flatMap((s) => s.r.filter((v) => v !== null));
  const yMax = Math.max(1e-9, ...values) * 1.05;
  const xMin = d[0], xMax = d[d.length - 1];
  const sx = (x) => pad + ((x - xMin) / (xMax - xMin)) * (w - 2 * pad);
  const sy = (y) => h - pad - (y / yMax) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  ctx.beginPath();
  ctx.moveTo(pad, pad / 2);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad / 2, h - pad);
  ctx.stroke();
  for (let i = 0; i <= 5; i++) {
    const x = xMin + ((xMax - xMin) * i) / 5;
    const y = (yMax * i) / 5;
    ctx.fillText(x.toFixed(2), sx(x) - 12, h - pad + 16);
    ctx.fillText(y.toFixed(2), 4, sy(y) + 4);
  }
  ctx.fillText("D", w - pad, h - pad + 30);
  ctx.fillText("bits", 4, pad / 2);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    let drawing = false;
    s.r.forEach((v, i) => {
      if (v === null) {
        drawing = false;
        return;
      }
      if (drawing) ctx.lineTo(sx(d[i]), sy(v));
      else ctx.moveTo(sx(d[i]), sy(v));
      drawing = true;
    });
    ctx.stroke();
  }
}

function runCurves() {
  const c = Number($("c").value);
  const points = Number($("points").value);
  $("curves-status").textContent = "computing...";
  // Let the status repaint before the solver blocks the thread.
  setTimeout(() => {
    const t0 = performance.now();
    try {
      const v = JSON.parse(fig2_curves(c, points));
      plot($("curves"), v.d, [
        { r: v.ri2, color: "#7d8c99" },
        { r: v.r2, color: "#2471a3" },
        { r: v.r1, color: "#c0392b" },
      ]);
      $("curves-status").textContent = `${((performance.now() - t0) / 1000).toFixed(1)} s`;
    } catch (e) {
      $("curves-status").textContent = String(e);
    }
  }, 20);
}

function runAnalyze() {
  const table = $("analysis");
  try {
    const v = JSON.parse(analyze_fig2(Number($("c-analyze").value)));
    const rows = [
      ["memory span", v.memory_span],
      ["D_min", v.d_min],
      ["D_max", v.d_max],
      ["e1", v.e1],
      ["e2", v.e2],
      ["convex", v.convex],
      ["affine", v.affine],
      ["D_min kernel", JSON.stringify(v.witness_min)],
    ];
    table.innerHTML = rows.map(([k, x]) => `<tr><th>${k}</th><td>${x}</td></tr>`).join("");
  } catch (e) {
    table.innerHTML = `<tr><td>${e}</td></tr>`;
  }
}

function runGaussian() {
  try {
    const v = JSON.parse(gaussian_curve(Number($("sigma2").value), Number($("gamma").value), 121));
    plot($("gaussian"), v.d, [{ r: v.r, color: "#2471a3" }]);
    $("gaussian-status").textContent =
      `infeasible up to D = ${v.d_min.toFixed(4)}, zero rate from D = ${v.d_zero_rate.toFixed(4)}`;
  } catch (e) {
    $("gaussian-status").textContent = String(e);
  }
}

await init();
$("run-curves").addEventListener("click", runCurves);
$("run-analyze").addEventListener("click", runAnalyze);
$("run-gaussian").addEventListener("click", runGaussian);
runAnalyze();
runGaussian();
runCurves();
