//! Static periodic-table lookup used for record validation and figure export.

const SYMBOLS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh",
    "Fl", "Mc", "Lv", "Ts", "Og",
];

/// First atomic number of each period.
const PERIOD_STARTS: [u8; 7] = [1, 3, 11, 19, 37, 55, 87];

/// Position of an element in the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub atomic_number: u8,
    pub period: u8,
    /// IUPAC group 1..=18. Lanthanides and actinides report group 3.
    pub group: u8,
}

pub fn atomic_number(symbol: &str) -> Option<u8> {
    SYMBOLS
        .iter()
        .position(|s| *s == symbol)
        .map(|i| (i + 1) as u8)
}

pub fn symbol(atomic_number: u8) -> Option<&'static str> {
    SYMBOLS
        .get((atomic_number as usize).checked_sub(1)?)
        .copied()
}

pub fn is_element(symbol: &str) -> bool {
    atomic_number(symbol).is_some()
}

pub fn position(symbol: &str) -> Option<Position> {
    let z = atomic_number(symbol)?;
    let period_idx = PERIOD_STARTS.iter().rposition(|&start| z >= start)?;
    let offset = z - PERIOD_STARTS[period_idx] + 1;
    let group = match period_idx {
        0 => {
            if z == 1 {
                1
            } else {
                18
            }
        }
        1 | 2 => {
            if offset <= 2 {
                offset
            } else {
                offset + 10
            }
        }
        3 | 4 => offset,
        _ => match offset {
            1 | 2 => offset,
            3..=17 => 3,
            _ => offset - 14,
        },
    };
    Some(Position {
        atomic_number: z,
        period: period_idx as u8 + 1,
        group,
    })
}
