/** Collapsible tree model for query payloads (GPS, state, image metadata).
 *
 * Building the node structure is pure; turning it into DOM happens in a
 * separate thin function so tests can assert on the structure directly.
 */

export interface TreeNode {
  label: string;
  value?: string;
  children: TreeNode[];
}

function isPlain(value: unknown): boolean {
  return (
    value === null ||
    typeof value === "number" ||
    typeof value === "string" ||
    typeof value === "boolean"
  );
}

function formatScalar(value: unknown): string {
  if (typeof value === "string") return `'${value}'`;
  if (value === true) return "True";
  if (value === false) return "False";
  return String(value);
}

export function buildTree(label: string, payload: unknown): TreeNode {
  if (isPlain(payload)) {
    return { label, value: formatScalar(payload), children: [] };
  }
  if (Array.isArray(payload)) {
    return {
      label,
      children: payload.map((item, i) => buildTree(String(i), item)),
    };
  }
  const record = payload as Record<string, unknown>;
  return {
    label,
    children: Object.keys(record)
      .sort()
      .map((key) => buildTree(key, record[key])),
  };
}

export function renderTree(node: TreeNode): HTMLElement {
  if (node.children.length === 0) {
    const leaf = document.createElement("div");
    leaf.className = "tree-leaf";
    leaf.textContent = `${node.label}: ${node.value ?? ""}`;
    return leaf;
  }
  const details = document.createElement("details");
  details.open = true;
  details.className = "tree-branch";
  const summary = document.createElement("summary");
  summary.textContent = node.label;
  details.appendChild(summary);
  for (const child of node.children) {
    details.appendChild(renderTree(child));
  }
  return details;
}
