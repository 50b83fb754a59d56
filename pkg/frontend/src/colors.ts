// The plan display color code: done acts green, persistent goals blue,
// intentions purple, beliefs straw. Anything else reads as a belief-like
// record. Dependency arrows are black; blocked links render dashed red.

export const LEGEND: Record<string, string> = {
  done: "green",
  doing: "green",
  pgoal: "blue",
  "knowif-goal": "blue",
  "knowref-goal": "blue",
  intend: "purple",
  bel: "straw",
  fact: "straw",
  default: "straw",
};

export const CSS_COLOR: Record<string, string> = {
  green: "#74c476",
  blue: "#6baed6",
  purple: "#9e9ac8",
  straw: "#e7cfa0",
};

export function nodeColor(kind: string): string {
  return LEGEND[kind] ?? "straw";
}

export function nodeFill(kind: string): string {
  return CSS_COLOR[nodeColor(kind)];
}

const BADGES: Record<string, string> = {
  inform: "INF", informref: "REF", assert: "AST", assertref: "ARF",
  whq: "WHQ", ynq: "YNQ", request: "REQ", verifyref: "VRF",
  informif: "IIF", confirm: "CNF", greet: "GRT", emote: "EMO", exec: "EXE",
};

export function actBadge(actType: string): string {
  return BADGES[actType] ?? actType.slice(0, 3).toUpperCase();
}
