import init, { timeline, idle_curve, soliton } from "./pkg/c3p_wasm.js";

const PALETTE = ["#3b6fb6", "#d9822b", "#3a9a5b", "#b8455c", "#7a5cb0", "#8c6d3f"];

function fields(form) {
  const out = {};
  for (const el of form.elements) {
    if (!el.name) continue;
    out[el.name] = el.type === "checkbox" ? el.checked : el.type === "number" ? Number(el.value) : el.value;
  }
  return out;
}

function guard(statsEl, fn) {
  try {
    statsEl.classList.remove("err");
    fn();
  } catch (e) {
    statsEl.classList.add("err");
    statsEl.textContent = String(e.message ?? e);
  }
}

function frame(canvas) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.font = "11px system-ui, sans-serif";
  return ctx;
}

function axes(ctx, w, h, pad, xmax, xlabel) {
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad.l, pad.t);
  ctx.lineTo(pad.l, h - pad.b);
  ctx.lineTo(w - pad.r, h - pad.b);
  ctx.stroke();
  ctx.fillStyle = "#444";
  for (let i = 0; i <= 5; i++) {
    const x = pad.l + ((w - pad.l - pad.r) * i) / 5;
    ctx.fillText((xmax * i / 5).toPrecision(3), x - 8, h - pad.b + 14);
  }
  ctx.fillText(xlabel, w - pad.r - 60, h - 4);
}

function drawTimeline(p) {
  const t = JSON.parse(timeline(p.scheduler, p.helpers, p.rows, p.spread, p.mbps, p.fixed, p.seed));
  const canvas = document.getElementById("tl-canvas");
  const ctx = frame(canvas);
  const pad = { l: 40, r: 10, t: 8, b: 24 };
  const w = canvas.width, h = canvas.height;
  const xmax = Math.max(t.t_total, ...t.bars.map((b) => b.end));
  const sx = (x) => pad.l + ((w - pad.l - pad.r) * x) / xmax;
  const rowH = (h - pad.t - pad.b) / p.helpers;
  for (const b of t.bars) {
    const y = pad.t + b.helper * rowH;
    ctx.fillStyle = b.useful ? PALETTE[b.helper % PALETTE.length] : "#ccc";
    ctx.fillRect(sx(b.start), y + 1, Math.max(1, sx(b.end) - sx(b.start) - 0.5), rowH - 2);
  }
  ctx.strokeStyle = "#b00";
  ctx.beginPath();
  ctx.moveTo(sx(t.t_total), pad.t);
  ctx.lineTo(sx(t.t_total), h - pad.b);
  ctx.stroke();
  ctx.fillStyle = "#444";
  for (let n = 0; n < p.helpers && rowH >= 9; n++) ctx.fillText(`h${n}`, 6, pad.t + n * rowH + rowH / 2 + 4);
  axes(ctx, w, h, pad, xmax, "time (s)");
  const eff = t.efficiency.filter((e) => !Number.isNaN(e));
  const meanEff = eff.reduce((a, b) => a + b, 0) / Math.max(1, eff.length);
  document.getElementById("tl-stats").textContent =
    `${t.scheduler}: done at ${t.t_total.toFixed(3)} s, ${t.packets_sent} packets sent, ${t.waste} wasted, ` +
    `mean helper efficiency ${(100 * meanEff).toFixed(2)}%\ngrey bars were computed but not used`;
}

function drawIdle(p) {
  const c = JSON.parse(idle_curve(p.mu, p.a, p.rtt, 200, 7));
  const canvas = document.getElementById("idle-canvas");
  const ctx = frame(canvas);
  const pad = { l: 40, r: 10, t: 8, b: 24 };
  const w = canvas.width, h = canvas.height;
  const ymax = Math.max(1e-9, ...c.expected_tu, ...c.monte_carlo.map((m) => m[1])) * 1.1;
  const sx = (x) => pad.l + ((w - pad.l - pad.r) * x) / p.rtt;
  const sy = (y) => h - pad.b - ((h - pad.t - pad.b) * y) / ymax;
  ctx.strokeStyle = PALETTE[0];
  ctx.beginPath();
  c.rtt.forEach((r, i) => (i ? ctx.lineTo(sx(r), sy(c.expected_tu[i])) : ctx.moveTo(sx(r), sy(c.expected_tu[i]))));
  ctx.stroke();
  ctx.fillStyle = PALETTE[1];
  for (const [r, m] of c.monte_carlo) ctx.fillRect(sx(r) - 3, sy(m) - 3, 6, 6);
  ctx.fillStyle = "#444";
  ctx.fillText(ymax.toPrecision(3) + " s", 4, pad.t + 10);
  axes(ctx, w, h, pad, p.rtt, "round trip (s)");
  const last = c.efficiency[c.efficiency.length - 1];
  document.getElementById("idle-stats").textContent =
    `line: expected idle per packet, squares: Monte-Carlo\nefficiency at RTT=${p.rtt}: ${(100 * last).toFixed(3)}%`;
}

function drawSoliton(p) {
  const s = JSON.parse(soliton(p.rows, p.c, p.delta, p.trials, 11));
  const canvas = document.getElementById("lt-canvas");
  const ctx = frame(canvas);
  const half = canvas.width / 2;
  const h = canvas.height;
  const pad = { t: 8, b: 24 };
  // degree pmf on the left, overhead histogram on the right
  const pmax = Math.max(...s.pmf);
  const bw = (half - 50) / s.pmf.length;
  ctx.fillStyle = PALETTE[0];
  s.pmf.forEach((q, i) => {
    const bh = ((h - pad.t - pad.b) * q) / pmax;
    ctx.fillRect(40 + i * bw, h - pad.b - bh, Math.max(1, bw - 1), bh);
  });
  const bins = 20;
  const lo = Math.min(...s.overhead), hi = Math.max(...s.overhead) + 1e-9;
  const counts = new Array(bins).fill(0);
  for (const k of s.overhead) counts[Math.min(bins - 1, Math.floor(((k - lo) / (hi - lo)) * bins))]++;
  const cmax = Math.max(...counts);
  const hw = (half - 50) / bins;
  ctx.fillStyle = PALETTE[2];
  counts.forEach((n, i) => {
    const bh = ((h - pad.t - pad.b) * n) / cmax;
    ctx.fillRect(half + 30 + i * hw, h - pad.b - bh, hw - 1, bh);
  });
  ctx.fillStyle = "#444";
  ctx.fillText(`degree 1..${s.pmf.length}`, 40, h - 6);
  ctx.fillText(`overhead ${(100 * lo).toFixed(1)}% .. ${(100 * hi).toFixed(1)}%`, half + 30, h - 6);
  const mean = s.overhead.reduce((a, b) => a + b, 0) / s.overhead.length;
  document.getElementById("lt-stats").textContent =
    `mean degree ${s.mean_degree.toFixed(2)}, mean extra packets ${(100 * mean).toFixed(2)}% of rows over ${s.overhead.length} trials`;
}

function wire(id, statsId, draw) {
  const form = document.getElementById(id);
  const stats = document.getElementById(statsId);
  const go = () => guard(stats, () => draw(fields(form)));
  form.addEventListener("submit", (e) => {
    e.preventDefault();
    go();
  });
  go();
}

await init();
wire("tl-form", "tl-stats", drawTimeline);
wire("idle-form", "idle-stats", drawIdle);
wire("lt-form", "lt-stats", drawSoliton);
