//! Field-by-field store comparison with readable differences.

use foced_core::OcedStore;

/// Differences between two stores; empty when they are identical in
/// signature, objects, events (including times, attributes, observation
/// order and sequence numbers) and relations.
pub fn diff(a: &OcedStore, b: &OcedStore) -> Vec<String> {
    let mut out = Vec::new();
    if a.signature() != b.signature() {
        out.push(format!("signature: {:?} vs {:?}", a.signature(), b.signature()));
    }
    if a.objects().len() != b.objects().len() {
        out.push(format!("object count {} vs {}", a.objects().len(), b.objects().len()));
    }
    for (x, y) in a.objects().iter().zip(b.objects()) {
        if x.id != y.id {
            out.push(format!("object id {:?} vs {:?}", x.id, y.id));
        }
        if x.otype != y.otype {
            out.push(format!("object {:?} type {:?} vs {:?}", x.id, x.otype, y.otype));
        }
        if x.attrs != y.attrs {
            out.push(format!("object {:?} attrs {:?} vs {:?}", x.id, x.attrs, y.attrs));
        }
        if x.seq != y.seq {
            out.push(format!("object {:?} seq {} vs {}", x.id, x.seq, y.seq));
        }
    }
    if a.events().len() != b.events().len() {
        out.push(format!("event count {} vs {}", a.events().len(), b.events().len()));
    }
    for (x, y) in a.events().iter().zip(b.events()) {
        if x.id != y.id {
            out.push(format!("event id {:?} vs {:?}", x.id, y.id));
        }
        if x.etype != y.etype {
            out.push(format!("event {:?} type {:?} vs {:?}", x.id, x.etype, y.etype));
        }
        if x.time != y.time {
            out.push(format!("event {:?} time {:?} vs {:?}", x.id, x.time, y.time));
        }
        if x.attrs != y.attrs {
            out.push(format!("event {:?} attrs {:?} vs {:?}", x.id, x.attrs, y.attrs));
        }
        if x.observed != y.observed {
            out.push(format!("event {:?} observed {:?} vs {:?}", x.id, x.observed, y.observed));
        }
        if x.seq != y.seq {
            out.push(format!("event {:?} seq {} vs {}", x.id, x.seq, y.seq));
        }
    }
    if a.relations() != b.relations() {
        out.push(format!("relations {:?} vs {:?}", a.relations(), b.relations()));
    }
    out
}
