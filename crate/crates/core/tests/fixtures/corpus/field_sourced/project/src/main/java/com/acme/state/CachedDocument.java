package com.acme.state;

import com.thoughtworks.xstream.XStream;

public class CachedDocument {

    private final XStream xstream = new XStream();
    private String cached;

    public void setCached(String xml) {
        this.cached = xml;
    }

    public Object materialize(String hint) {
        return xstream.fromXML(cached);
    }
}
