//! Thin helpers over roxmltree for the plain-file subset used by the
//! scenario inputs. Unknown elements and attributes are ignored.

use crate::error::{Error, Result};
use std::str::FromStr;

pub(crate) fn parse_doc(text: &str) -> Result<roxmltree::Document<'_>> {
    roxmltree::Document::parse(text).map_err(|e| Error::Parse {
        line: e.pos().row as usize,
        msg: e.to_string(),
    })
}

pub(crate) fn req_attr<'a>(node: &roxmltree::Node<'a, '_>, name: &str) -> Result<&'a str> {
    node.attribute(name)
        .ok_or_else(|| Error::schema(node.tag_name().name(), format!("missing attribute '{name}'")))
}

pub(crate) fn req_parse<T: FromStr>(node: &roxmltree::Node<'_, '_>, name: &str) -> Result<T> {
    let raw = req_attr(node, name)?;
    raw.parse().map_err(|_| {
        Error::schema(
            node.tag_name().name(),
            format!("attribute '{name}': cannot parse '{raw}'"),
        )
    })
}

pub(crate) fn opt_parse<T: FromStr>(node: &roxmltree::Node<'_, '_>, name: &str) -> Result<Option<T>> {
    match node.attribute(name) {
        None => Ok(None),
        Some(raw) => raw.parse().map(Some).map_err(|_| {
            Error::schema(
                node.tag_name().name(),
                format!("attribute '{name}': cannot parse '{raw}'"),
            )
        }),
    }
}

/// All elements named `tag`, in document order, at any depth.
pub(crate) fn elements<'a, 'd>(
    doc: &'a roxmltree::Document<'d>,
    tag: &'a str,
) -> impl Iterator<Item = roxmltree::Node<'a, 'd>> {
    doc.descendants().filter(move |n| n.has_tag_name(tag))
}
