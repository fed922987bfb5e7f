import init, { analyze, simulate, last_writes } from "./pkg/arrayaccel_web.js";

const examples = {
  swap: `(vars (i 0) (k 0) (a 1))
(loop (guard (< i k))
      (update (i (+ i 1))
              ((select a (+ i 1)) (select a i))
              ((select a i) (select a (+ i 1)))))`,
  shift: `(vars (i 0) (k 0) (a 1))
(loop (guard (< i k))
      (update ((select a (+ i 1)) (select a i)) (i (+ i 1))))`,
  stride: `(vars (i 0) (j 0) (k 0) (a 1) (b 1))
(loop (guard (< i k))
      (update (i (+ i 1)) (j (+ j 2)) ((select a j) (+ (select b i) 1))))`,
  sums: `(vars (i 0) (j 0) (k 0))
(loop (guard (< i k)) (update (i (+ i 1)) (j (+ j i))))`,
  mixing: `(vars (i 0) (k 0) (a 1))
(loop (guard (< i k))
      (update (i (+ i 1))
              ((select a (+ i 1)) (+ (select a i) (select a (+ i 1))))))`,
};

const $ = (id) => document.getElementById(id);

function el(tag, attrs = {}, ...children) {
  const e = document.createElement(tag);
  Object.assign(e, attrs);
  for (const c of children) e.append(c);
  return e;
}

function table(head, rows) {
  const t = el("table", {}, el("tr", {}, ...head.map((h) => el("th", {}, h))));
  for (const { cells, cls } of rows) {
    t.append(el("tr", { className: cls || "" }, ...cells.map((c) => el("td", {}, String(c ?? "")))));
  }
  return t;
}

function show(target, result, render) {
  const out = $(target);
  out.replaceChildren();
  const v = JSON.parse(result);
  if (v.error) {
    out.append(el("pre", { className: "bad" }, v.error));
  } else {
    render(out, v);
  }
}

function input() {
  return JSON.stringify({
    scalars: JSON.parse($("scalars").value || "{}"),
    arrays: JSON.parse($("arrays").value || "{}"),
    n: Number($("n").value),
    lo: Number($("lo").value),
    hi: Number($("hi").value),
  });
}

function guarded(target, f) {
  try {
    f();
  } catch (e) {
    $(target).replaceChildren(el("pre", { className: "bad" }, String(e)));
  }
}

function runAnalyze() {
  show("analysis", analyze($("source").value), (out, v) => {
    out.append(table(["lvalue", "class", "justification"],
      v.lvalues.map((l) => ({ cells: [l.lvalue, l.class, l.justification] }))));
    out.append(el("p", {}, v.a_solvable ? "a-solvable" : `not a-solvable: ${v.reason}`));
    if (v.closed_forms) {
      out.append(el("pre", {}, Object.entries(v.closed_forms).map(([x, f]) => `${x}^(n) = ${f}`).join("\n")));
    }
    if (v.transition) out.append(el("pre", {}, v.transition.join("\n")));
    if (v.failure) out.append(el("pre", { className: "bad" }, v.failure));
    else if (v.transition_failure) out.append(el("pre", { className: "bad" }, v.transition_failure));
  });
}

function runSimulate() {
  show("simulation", simulate($("source").value, input()), (out, v) => {
    out.append(el("p", {}, v.agree ? "interpreter and closed forms agree" : "MISMATCH"));
    for (const r of v.rows) {
      if (r.cells) {
        out.append(el("h4", {}, r.name));
        out.append(table(["cell", "before", "after n (run)", "after n (closed form)"],
          r.cells.map((c) => ({
            cells: [c.cell, c.before, c.interpreter, c.closed_form],
            cls: c.interpreter === c.closed_form ? "" : "bad",
          }))));
      } else {
        out.append(table(["scalar", "before", "after n (run)", "after n (closed form)"],
          [{ cells: [r.name, r.before, r.interpreter, r.closed_form], cls: r.interpreter === r.closed_form ? "" : "bad" }]));
      }
    }
  });
}

function runLastWrites() {
  show("writes", last_writes($("source").value, $("array").value.trim(), input()), (out, v) => {
    out.append(el("pre", {}, v.cases.map((c) =>
      `update ${c.update} ${c.lvalue}: iteration ${c.iteration} if ${c.guard}`).join("\n")));
    const head = ["cell", ...v.cases.map((c) => `update ${c.update}`), "interpreter"];
    out.append(table(head, v.cells.map((row) => {
      const w = row.written;
      const fired = row.cases.filter((c) => c.holds);
      const ok = w ? fired.length === 1 && fired[0].update === w.update && fired[0].iteration === w.iteration : fired.length === 0;
      return {
        cells: [row.cell, ...row.cases.map((c) => (c.holds ? `it ${c.iteration}` : "")),
          w ? `update ${w.update}, it ${w.iteration}` : "unwritten"],
        cls: ok ? (w ? "hit" : "") : "bad",
      };
    })));
  });
}

await init();
for (const name of Object.keys(examples)) $("example").append(el("option", { value: name }, name));
$("example").onchange = () => { $("source").value = examples[$("example").value]; };
$("source").value = examples.swap;
$("analyze").onclick = () => guarded("analysis", runAnalyze);
$("simulate").onclick = () => guarded("simulation", runSimulate);
$("lastwrites").onclick = () => guarded("writes", runLastWrites);
runAnalyze();
