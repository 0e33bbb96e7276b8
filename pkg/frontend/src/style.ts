/** Console stylesheet, injected by the entry module. */

export const STYLE = `
:root {
  --bg: #0b0d12;
  --surface: #141823;
  --surface2: #1c2230;
  --border: #2a3245;
  --text: #dde3f0;
  --dim: #8a93a8;
  --accent: #6366f1;
  --ok: #22c55e;
  --warn: #eab308;
  --bad: #ef4444;
}
* { margin: 0; padding: 0; box-sizing: border-box; }
body {
  font-family: "Inter", "Segoe UI", system-ui, sans-serif;
  background: var(--bg);
  color: var(--text);
  height: 100vh;
  display: flex;
  flex-direction: column;
}
.topbar {
  display: flex; align-items: baseline; gap: 12px;
  padding: 12px 20px; background: var(--surface); border-bottom: 1px solid var(--border);
}
.topbar h1 { font-size: 16px; color: var(--accent); }
.subtitle { color: var(--dim); font-size: 13px; }
.panels {
  flex: 1; display: grid; grid-template-columns: 30% 34% 36%;
  gap: 1px; background: var(--border); min-height: 0;
}
.panel { background: var(--bg); padding: 14px; overflow-y: auto; min-height: 0; }
.panel h2 { font-size: 13px; text-transform: uppercase; letter-spacing: 0.08em; color: var(--dim); margin-bottom: 10px; }
.panel h3 { font-size: 13px; margin: 14px 0 6px; color: var(--text); }
.section { margin-bottom: 12px; }
.empty-state { color: var(--dim); font-size: 13px; padding: 12px; border: 1px dashed var(--border); border-radius: 8px; }
.bubble { border: 1px solid var(--border); border-radius: 10px; padding: 8px 10px; margin-bottom: 8px; background: var(--surface); }
.bubble-question { border-left: 3px solid var(--accent); }
.bubble-answer { border-left: 3px solid var(--ok); margin-left: 18px; background: var(--surface2); }
.bubble-system { color: var(--dim); font-size: 12px; background: transparent; }
.bubble .who { font-size: 10px; text-transform: uppercase; color: var(--dim); display: block; margin-bottom: 2px; }
.bubble p { font-size: 13px; white-space: pre-wrap; }
.answer-controls { margin-top: 6px; display: flex; gap: 6px; flex-wrap: wrap; }
.answer-text { flex: 1; min-width: 140px; background: var(--surface2); color: var(--text); border: 1px solid var(--border); border-radius: 6px; padding: 6px; font: inherit; }
button {
  font: inherit; font-size: 13px; padding: 6px 12px; border-radius: 6px;
  border: 1px solid var(--border); background: var(--surface2); color: var(--text); cursor: pointer;
}
button:hover:not(:disabled) { border-color: var(--accent); }
button:disabled { opacity: 0.45; cursor: not-allowed; }
.stages { list-style: none; display: flex; flex-wrap: wrap; gap: 6px; }
.stage { font-size: 12px; padding: 4px 10px; border-radius: 999px; border: 1px solid var(--border); color: var(--dim); }
.stage-done { border-color: var(--ok); color: var(--ok); }
.stage-current { border-color: var(--accent); color: var(--accent); }
.stage-failed { border-color: var(--bad); color: var(--bad); }
.actions { display: flex; gap: 8px; align-items: center; margin: 12px 0; }
.bundle-link { color: var(--ok); font-size: 13px; }
.ok-banner { color: var(--ok); font-size: 13px; margin: 6px 0; }
.failure-banner { color: var(--bad); font-size: 13px; margin: 6px 0; }
.code {
  background: var(--surface); border: 1px solid var(--border); border-radius: 8px;
  padding: 10px; font-family: "SF Mono", "Fira Code", monospace; font-size: 12px;
  overflow-x: auto; white-space: pre; max-height: 320px;
}
.output-preview { max-height: 180px; }
.output-files { font-size: 12px; color: var(--dim); margin: 4px 0 8px 18px; }
details summary { color: var(--dim); font-size: 12px; cursor: pointer; margin: 6px 0; }
.graph svg { background: var(--surface); border: 1px solid var(--border); border-radius: 10px; }
.node rect { fill: var(--surface2); stroke-width: 1.6; cursor: pointer; }
.node-label { fill: var(--text); font-size: 12px; text-anchor: middle; pointer-events: none; }
.node-kind { fill: var(--dim); font-size: 10px; text-anchor: middle; pointer-events: none; }
.node .approved { fill: var(--ok); font-size: 12px; }
.edge { stroke: #8a93a8; stroke-width: 1.4; }
.adapter-badge rect { fill: var(--warn); opacity: 0.9; cursor: help; }
.adapter-badge text { fill: #1a1a1a; font-size: 11px; font-weight: 700; text-anchor: middle; pointer-events: none; }
.node-detail {
  position: sticky; bottom: 0; margin-top: 10px; padding: 10px;
  background: var(--surface2); border: 1px solid var(--accent); border-radius: 8px; font-size: 13px;
}
.diagnostic { color: var(--bad); border: 1px solid var(--bad); border-radius: 8px; padding: 10px; font-size: 13px; }
`;
