// Build the wasm package into ./pkg first (see the crate README section).
import init, { voteDemo, driftDemo, readingDemo } from "./pkg/gazeprompt_web.js";

const SCALE = 0.5; // engine works in 1920x1200 screen pixels

function call(fn, request, out) {
  try {
    return JSON.parse(fn(JSON.stringify(request)));
  } catch (e) {
    out.textContent = String(e);
    out.className = "err";
    return null;
  }
}

function lineBoxes(ctx, layout, highlight) {
  for (const l of layout.lines) {
    ctx.fillStyle = l.line_id === highlight ? "#fff3a0" : "#eef";
    ctx.fillRect(l.left * SCALE, l.top * SCALE, (l.right - l.left) * SCALE, (l.bottom - l.top) * SCALE);
  }
}

function dot(ctx, x, y, r, color) {
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(x * SCALE, y * SCALE, r, 0, 2 * Math.PI);
  ctx.fill();
}

// line identification
const voteCanvas = document.getElementById("vote-canvas");
const voteOut = document.getElementById("vote-out");
let fixations = [];

function drawVotes() {
  const ctx = voteCanvas.getContext("2d");
  ctx.clearRect(0, 0, voteCanvas.width, voteCanvas.height);
  const request = {
    lines: Number(document.getElementById("vote-lines").value),
    line_height: 40,
    line_pitch: Number(document.getElementById("vote-pitch").value),
    fixations,
  };
  if (fixations.length === 0) {
    voteOut.textContent = "click to place fixations";
    return;
  }
  const r = call(voteDemo, request, voteOut);
  if (!r) return;
  voteOut.className = "";
  lineBoxes(ctx, r.layout, r.winner);
  fixations.forEach(([x, y], i) => {
    dot(ctx, x, y, 6, "#c33");
    ctx.fillStyle = "#000";
    ctx.fillText(`${i + 1}: line ${r.votes[i].landing_line}, w=${r.votes[i].weight.toFixed(3)}`, x * SCALE + 9, y * SCALE + 4);
  });
  voteOut.textContent =
    r.totals.map(([l, w]) => `line ${l}: ${w.toFixed(3)}`).join("\n") + `\nwinner: line ${r.winner}`;
}

voteCanvas.addEventListener("click", (e) => {
  const rect = voteCanvas.getBoundingClientRect();
  fixations.push([(e.clientX - rect.left) / SCALE, (e.clientY - rect.top) / SCALE]);
  if (fixations.length > 3) fixations.shift();
  drawVotes();
});
document.getElementById("vote-clear").addEventListener("click", () => { fixations = []; drawVotes(); });
document.getElementById("vote-lines").addEventListener("input", drawVotes);
document.getElementById("vote-pitch").addEventListener("input", drawVotes);

// drift correction
const driftCanvas = document.getElementById("drift-canvas");
const driftOut = document.getElementById("drift-out");

function drawDrift() {
  const v = (id) => Number(document.getElementById(id).value);
  const r = call(driftDemo, {
    knots: [[0, v("drift-top")], [600, v("drift-mid")], [1200, v("drift-bottom")]],
    noise_sd_px: v("drift-noise"),
    seed: 7,
  }, driftOut);
  if (!r) return;
  driftOut.className = "";
  const ctx = driftCanvas.getContext("2d");
  ctx.clearRect(0, 0, driftCanvas.width, driftCanvas.height);
  for (const s of r.validation) {
    ctx.strokeStyle = "#2a2";
    ctx.beginPath();
    ctx.moveTo(0, s.y_px * SCALE);
    ctx.lineTo(driftCanvas.width, s.y_px * SCALE);
    ctx.stroke();
    for (const [x, y] of s.raw) dot(ctx, x, y, 1.5, "#999");
    if (r.apply_correction) for (const [x, y] of s.corrected) dot(ctx, x, y, 1.5, "#24c");
  }
  driftOut.textContent =
    r.profile.calibrated_line_ys.map((y, i) => `y ${y}: offset ${r.profile.per_line_offset[i].toFixed(2)} px`).join("\n") +
    `\nvalidation error raw ${r.raw_error_px.toFixed(2)} px, corrected ${r.corrected_error_px.toFixed(2)} px` +
    `\ncorrection ${r.apply_correction ? "applied" : "rejected"}`;
}

for (const id of ["drift-top", "drift-mid", "drift-bottom", "drift-noise"]) {
  document.getElementById(id).addEventListener("input", drawDrift);
}

// simulated reading
const readCanvas = document.getElementById("read-canvas");
const readOut = document.getElementById("read-out");
let timer = null;

function runReading() {
  if (timer) clearInterval(timer);
  const mode = document.getElementById("read-mode").value;
  const r = call(readingDemo, {
    seed: Number(document.getElementById("read-seed").value),
    noise_sd_px: Number(document.getElementById("read-noise").value),
    augmentation: { ls_mode: mode },
  }, readOut);
  if (!r) return;
  readOut.className = "";
  const ctx = readCanvas.getContext("2d");
  let i = 0;
  let line = null;
  let magnified = null;
  const events = r.events.filter((e) => e.type === "augment").map((e) => e.payload.event);
  timer = setInterval(() => {
    if (i >= r.fixations.length) {
      clearInterval(timer);
      const m = r.metrics;
      readOut.textContent = m
        ? `line switches ${m.line_switch_count}, mean switch ${m.mean_line_switch_time_ms.toFixed(0)} ms, ` +
          `deviations ${m.deviation_count}, max one-pass ${m.max_one_pass_fixation_ms.toFixed(0)} ms`
        : "";
      return;
    }
    const f = r.fixations[i++].fixation;
    for (const e of events.filter((e) => e.at <= f.onset + f.duration && !e.shown)) {
      e.shown = true;
      if (e.kind === "highlight_line" || e.kind === "arrow_line") line = e.line_id;
      if (e.kind === "clear_line") line = null;
      if (e.kind === "magnify_word") magnified = e.word_id;
      if (e.kind === "dismiss_magnifier") magnified = null;
    }
    ctx.clearRect(0, 0, readCanvas.width, readCanvas.height);
    lineBoxes(ctx, r.layout, mode === "off" ? null : line);
    ctx.font = "15px monospace";
    for (const w of r.layout.words) {
      const l = r.layout.lines[w.line_id];
      ctx.fillStyle = w.word_id === magnified ? "#c00" : "#222";
      ctx.fillText(w.text, w.left * SCALE, (l.bottom - 10) * SCALE);
    }
    dot(ctx, f.cx, f.cy, 5, "rgba(200,40,40,0.7)");
    readOut.textContent = `fixation ${i}/${r.fixations.length} (${(f.duration / 1000).toFixed(0)} ms)`;
  }, 60);
}

document.getElementById("read-run").addEventListener("click", runReading);

await init();
drawVotes();
drawDrift();
runReading();
