import init, { generate_instance, solve_instance, network_views, beta_sweep } from "./pkg/sbrp_demo.js";

const $ = (id) => document.getElementById(id);
let instance = null;

function num(id) {
  return Number($(id).value);
}

function gamma() {
  return $("use-gamma").checked ? num("gamma") : NaN;
}

function status(text) {
  $("status").textContent = text;
}

// yield to the browser so the status line paints before a long call
function busy(label, work) {
  status(label + "...");
  setTimeout(() => {
    try {
      if (!instance) regenerate();
      work();
      status("");
    } catch (e) {
      status(String(e.message ?? e));
    }
  }, 10);
}

function regenerate() {
  instance = generate_instance(num("seed"), num("students"), num("capacity"), num("tmax"));
}

$("generate").onclick = () =>
  busy("generating", () => {
    regenerate();
    const n = JSON.parse(instance).students.length;
    status(`instance with ${n} students ready`);
  });

$("solve").onclick = () =>
  busy("solving", () => {
    const view = JSON.parse(solve_instance(instance, num("beta"), gamma()));
    $("routes").innerHTML = view.svg;
    $("table").textContent = view.table;
    $("solve-out").hidden = false;
  });

$("network").onclick = () =>
  busy("building networks", () => {
    const view = JSON.parse(network_views(instance, num("beta")));
    $("before").innerHTML = view.before;
    $("after").innerHTML = view.after;
    $("before-cap").textContent = `all feasible pairs: ${view.edges_before} edges`;
    $("after-cap").textContent = `pruned with beta ${num("beta")}: ${view.edges_after} edges`;
    $("network-out").hidden = false;
  });

$("sweep").onclick = () =>
  busy("sweeping", () => {
    const rows = JSON.parse(beta_sweep(instance, $("grid").value, gamma()));
    const body = $("sweep-rows");
    body.replaceChildren();
    for (const r of rows) {
      const tr = document.createElement("tr");
      const cells = [
        r.value,
        r.objective == null ? "-" : r.objective.toFixed(2),
        r.bus_count ?? "-",
        r.trip_count ?? "-",
        r.status,
      ];
      for (const c of cells) {
        const td = document.createElement("td");
        td.textContent = c;
        tr.appendChild(td);
      }
      body.appendChild(tr);
    }
    $("sweep-out").hidden = false;
  });

await init();
status("ready");
