import init, { simulate_paths, convergence, validity } from "./pkg/cevsim_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function common() {
  return {
    scheme: $("scheme").value,
    k3: num("k3"),
    q: num("q"),
    theta: num("theta"),
    seed: BigInt(num("seed")),
  };
}

function axes(ctx, w, h, pad, xr, yr, xlabel, ylabel) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
  ctx.fillText(xlabel, w - pad - 60, h - 8);
  ctx.fillText(ylabel, 4, pad - 8);
  ctx.fillText(yr[1].toPrecision(3), 4, pad + 4);
  ctx.fillText(yr[0].toPrecision(3), 4, h - pad);
  ctx.fillText(xr[0].toPrecision(3), pad, h - pad + 14);
  ctx.fillText(xr[1].toPrecision(3), w - pad - 30, h - pad + 14);
  const sx = (x) => pad + ((x - xr[0]) / (xr[1] - xr[0] || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - yr[0]) / (yr[1] - yr[0] || 1)) * (h - 2 * pad);
  return { sx, sy };
}

function drawPaths() {
  const c = common();
  const level = num("level");
  const n = num("paths");
  let data;
  try {
    $("validity").textContent = validity(c.scheme, c.k3, c.q, c.theta, level);
    data = simulate_paths(c.scheme, c.k3, c.q, c.theta, level, n, c.seed);
  } catch (e) {
    $("paths-status").textContent = String(e);
    return;
  }
  const nodes = (1 << level) + 1;
  let lo = 0;
  let hi = -Infinity;
  for (const v of data) {
    lo = Math.min(lo, v);
    hi = Math.max(hi, v);
  }
  const negative = lo < 0;
  $("paths-status").textContent = negative ? "some paths went negative" : "all paths stayed nonnegative";
  const canvas = $("paths-canvas");
  const ctx = canvas.getContext("2d");
  const { sx, sy } = axes(ctx, canvas.width, canvas.height, 40, [0, 1], [lo, hi], "t", "x");
  ctx.strokeStyle = "#c33";
  ctx.setLineDash([4, 4]);
  ctx.beginPath();
  ctx.moveTo(sx(0), sy(0));
  ctx.lineTo(sx(1), sy(0));
  ctx.stroke();
  ctx.setLineDash([]);
  for (let p = 0; p < n; p++) {
    ctx.strokeStyle = `hsl(${(p * 47) % 360} 60% 45%)`;
    ctx.beginPath();
    for (let i = 0; i < nodes; i++) {
      const x = sx(i / (nodes - 1));
      const y = sy(data[p * nodes + i]);
      i ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
    }
    ctx.stroke();
  }
}

function drawConvergence() {
  const c = common();
  $("conv-status").textContent = "running...";
  setTimeout(() => {
    let out;
    try {
      out = convergence(c.scheme, c.k3, c.q, c.theta, num("cmin"), num("cmax"), num("ref"), num("m"), num("l"), c.seed);
    } catch (e) {
      $("conv-status").textContent = String(e);
      return;
    }
    const order = out[out.length - 1];
    const rows = [];
    for (let i = 0; i + 4 <= out.length - 1; i += 4) {
      rows.push(out.slice(i, i + 4).map(Math.log2));
    }
    $("conv-status").textContent = `fitted order ${order.toFixed(3)}`;
    const finite = rows.flatMap((r) => r.slice(1)).filter(Number.isFinite);
    const xs = rows.map((r) => r[0]);
    const canvas = $("conv-canvas");
    const ctx = canvas.getContext("2d");
    const { sx, sy } = axes(
      ctx, canvas.width, canvas.height, 40,
      [Math.min(...xs) - 0.5, Math.max(...xs) + 0.5],
      [Math.min(...finite) - 0.5, Math.max(...finite) + 0.5],
      "log2 dt", "log2 error",
    );
    ctx.strokeStyle = "#246";
    ctx.fillStyle = "#246";
    ctx.beginPath();
    rows.forEach(([x, e], i) => (i ? ctx.lineTo(sx(x), sy(e)) : ctx.moveTo(sx(x), sy(e))));
    ctx.stroke();
    for (const [x, e, lo, hi] of rows) {
      ctx.beginPath();
      ctx.arc(sx(x), sy(e), 3, 0, 2 * Math.PI);
      ctx.fill();
      if (Number.isFinite(lo) && Number.isFinite(hi)) {
        ctx.beginPath();
        ctx.moveTo(sx(x), sy(lo));
        ctx.lineTo(sx(x), sy(hi));
        ctx.stroke();
      }
    }
  }, 10);
}

await init();
$("draw").addEventListener("click", drawPaths);
$("converge").addEventListener("click", drawConvergence);
for (const id of ["scheme", "k3", "q", "theta", "seed", "level", "paths"]) {
  $(id).addEventListener("change", drawPaths);
}
drawPaths();
