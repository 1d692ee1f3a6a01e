use super::PolygonalMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatchKind {
    /// The central cell alone.
    Patch0,
    /// Central cell plus every cell sharing at least one vertex with it.
    Patch1,
    /// A [`Patch1`](PatchKind::Patch1) whose central cell touches the boundary.
    Patch1B,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementPatch {
    pub central_cell: usize,
    /// Sorted, includes the central cell.
    pub member_cells: Vec<usize>,
    pub kind: PatchKind,
}

impl ElementPatch {
    pub fn len(&self) -> usize {
        self.member_cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_cells.is_empty()
    }
}

impl PolygonalMesh {
    /// Builds the patch of the requested kind around `cell`. `Patch1` and
    /// `Patch1B` are interchangeable on input: the returned kind reflects
    /// whether the central cell has a boundary vertex.
    pub fn build_patch(&self, cell: usize, kind: PatchKind) -> ElementPatch {
        match kind {
            PatchKind::Patch0 => ElementPatch {
                central_cell: cell,
                member_cells: vec![cell],
                kind,
            },
            PatchKind::Patch1 | PatchKind::Patch1B => {
                let mut members: Vec<usize> = self
                    .cell(cell)
                    .iter()
                    .flat_map(|&v| self.cells_around_vertex(v).iter().copied())
                    .collect();
                members.sort_unstable();
                members.dedup();
                let kind = if self.touches_boundary(cell) {
                    PatchKind::Patch1B
                } else {
                    PatchKind::Patch1
                };
                ElementPatch {
                    central_cell: cell,
                    member_cells: members,
                    kind,
                }
            }
        }
    }
}
