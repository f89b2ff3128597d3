import init, { rotation_index, loop_spectrum, ellipsoid_return_map } from "./pkg/symreeb_web.js";

const num = (id) => parseFloat(document.getElementById(id).value);
const show = (id, text) => { document.getElementById(id).textContent = text; };
const half = (h) => (h.den === 1 ? `${h.num}` : `${h.num}/${h.den}`);

function runIndex() {
  const r = JSON.parse(rotation_index(num("cz-c"), num("cz-t")));
  if (r.error) return show("cz-out", r.message);
  const xs = r.crossings.map((c) => `t = ${c.t.toFixed(6)}  signature ${c.signature}`);
  show("cz-out", [`mu_CZ = ${half(r.mu)}`, ...xs].join("\n"));
}

function runSpectrum() {
  const bc = document.getElementById("sp-bc").value;
  const r = JSON.parse(loop_spectrum(num("sp-a0"), num("sp-a1"), num("sp-b1"), num("sp-c0"), bc, num("sp-lo"), num("sp-hi")));
  if (r.error) return show("sp-out", r.message);
  const rows = r.entries.map((e) => `${e.lambda.toFixed(8).padStart(14)}  winding ${half(e.winding).padStart(5)}  x${e.multiplicity}`);
  const mu = r.mu.error ? r.mu.error : half(r.mu);
  show("sp-out", [`index = ${mu}`, ...rows].join("\n"));
}

function runReturnMap() {
  show("rm-out", "computing...");
  setTimeout(() => {
    const r = JSON.parse(ellipsoid_return_map(num("rm-r1"), num("rm-r2"), Math.round(num("rm-n"))));
    if (r.error) return show("rm-out", r.message);
    const fp = r.fixed_points.map((f) => `(${f.w[0].toExponential(2)}, ${f.w[1].toExponential(2)})`).join(" ");
    show("rm-out", `reversibility ${r.reversibility.toExponential(2)}  area drift ${r.area_drift.toExponential(2)}\nfixed points ${fp}`);
    const canvas = document.getElementById("rm-canvas");
    const ctx = canvas.getContext("2d");
    const s = canvas.width / 2.2;
    const px = (x, y) => [canvas.width / 2 + s * x, canvas.height / 2 - s * y];
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.beginPath();
    ctx.arc(canvas.width / 2, canvas.height / 2, s, 0, 2 * Math.PI);
    ctx.strokeStyle = "#999";
    ctx.stroke();
    for (const p of r.samples) {
      const [ax, ay] = px(p.x[0], p.x[1]);
      const [bx, by] = px(p.fx[0], p.fx[1]);
      ctx.strokeStyle = "rgba(60, 90, 200, 0.35)";
      ctx.beginPath();
      ctx.moveTo(ax, ay);
      ctx.lineTo(bx, by);
      ctx.stroke();
      ctx.fillStyle = "#c33";
      ctx.fillRect(bx - 1.5, by - 1.5, 3, 3);
    }
  }, 0);
}

await init();
document.getElementById("cz-run").onclick = runIndex;
document.getElementById("sp-run").onclick = runSpectrum;
document.getElementById("rm-run").onclick = runReturnMap;
runIndex();
