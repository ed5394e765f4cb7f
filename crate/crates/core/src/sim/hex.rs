//! Hexagonal cell layout on axial coordinates.

use rand::Rng;

/// Index of a cell within the topology.
pub type CellId = usize;

/// Axial direction order; fixed so neighbor slots are stable.
pub const HEX_DIRECTIONS: [(i32, i32); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];

/// One hexagonal cell.
#[derive(Debug, Clone)]
pub struct HexCell {
    pub id: CellId,
    pub q: i32,
    pub r: i32,
    /// Neighbor per direction; `None` where the grid ends.
    pub neighbors: [Option<CellId>; 6],
}

impl HexCell {
    pub fn degree(&self) -> usize {
        self.neighbors.iter().flatten().count()
    }

    /// Missing neighbors: `6 - degree`.
    pub fn boundary_deficit(&self) -> u32 {
        (6 - self.degree()) as u32
    }
}

/// A disc of hexagonal cells with `rings` rings around the center
/// (`rings = 2` gives the 19-cell layout).
#[derive(Debug, Clone)]
pub struct HexTopology {
    pub rings: u32,
    pub cells: Vec<HexCell>,
    /// Boundary cells paired with their deficits, in cell order; handoffs
    /// leaving the region re-enter through these, weighted by deficit.
    reinjection: Vec<(CellId, u32)>,
    total_deficit: u32,
}

/// Enumerates the axial-coordinate disc and wires up adjacency.
pub fn build_hex_topology(rings: u32) -> HexTopology {
    let radius = rings as i32;
    let mut coords: Vec<(i32, i32)> = Vec::new();
    for q in -radius..=radius {
        for r in -radius..=radius {
            if (q + r).abs() <= radius {
                coords.push((q, r));
            }
        }
    }
    coords.sort_unstable();

    let index = |q: i32, r: i32| -> Option<CellId> {
        if q.abs() <= radius && r.abs() <= radius && (q + r).abs() <= radius {
            coords.binary_search(&(q, r)).ok()
        } else {
            None
        }
    };

    let cells: Vec<HexCell> = coords
        .iter()
        .enumerate()
        .map(|(id, &(q, r))| {
            let mut neighbors = [None; 6];
            for (slot, (dq, dr)) in HEX_DIRECTIONS.iter().enumerate() {
                neighbors[slot] = index(q + dq, r + dr);
            }
            HexCell { id, q, r, neighbors }
        })
        .collect();

    let reinjection: Vec<(CellId, u32)> = cells
        .iter()
        .filter(|c| c.boundary_deficit() > 0)
        .map(|c| (c.id, c.boundary_deficit()))
        .collect();
    let total_deficit = reinjection.iter().map(|&(_, d)| d).sum();

    HexTopology {
        rings,
        cells,
        reinjection,
        total_deficit,
    }
}

impl HexTopology {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn neighbors(&self, cell: CellId) -> impl Iterator<Item = CellId> + '_ {
        self.cells[cell].neighbors.iter().flatten().copied()
    }

    /// Sum of boundary deficits, the total reinjection weight.
    pub fn total_deficit(&self) -> u32 {
        self.total_deficit
    }

    pub fn reinjection_weights(&self) -> &[(CellId, u32)] {
        &self.reinjection
    }
}

/// Destination for a handoff that left the region: a boundary cell drawn with
/// probability proportional to its deficit, compensating boundary cells for
/// the neighbors they lack. With `allow_self` the source itself can be drawn
/// when it has positive deficit.
pub fn handle_boundary_handoff(
    topology: &HexTopology,
    from: CellId,
    rng: &mut impl Rng,
    allow_self: bool,
) -> CellId {
    let from_deficit = topology.cells[from].boundary_deficit();
    let total = if allow_self {
        topology.total_deficit
    } else {
        topology.total_deficit - from_deficit
    };
    if total == 0 {
        // Nowhere else to go (single cell, or no other boundary deficit).
        return from;
    }
    let mut ticket = rng.random_range(0..total);
    for &(cell, deficit) in &topology.reinjection {
        if !allow_self && cell == from {
            continue;
        }
        if ticket < deficit {
            return cell;
        }
        ticket -= deficit;
    }
    unreachable!("reinjection weights exhausted");
}
